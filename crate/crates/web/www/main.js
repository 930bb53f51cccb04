import init, { xy_bounds, gaussian_fisher, random_model_bounds } from "./pkg/qcrb_web.js";

const value = (id) => Number(document.getElementById(id).value);

function show(id, compute) {
  const out = document.getElementById(id);
  try {
    out.textContent = JSON.stringify(JSON.parse(compute()), null, 2);
  } catch (err) {
    out.textContent = `error: ${err}`;
  }
}

await init();

document.getElementById("xy-run").onclick = () =>
  show("xy-out", () => xy_bounds(value("xy-z")));
document.getElementById("g-run").onclick = () =>
  show("g-out", () => gaussian_fisher(value("g-nbar"), value("g-r")));
document.getElementById("r-run").onclick = () =>
  show("r-out", () => random_model_bounds(value("r-seed"), value("r-d"), value("r-p"), value("r-q")));
