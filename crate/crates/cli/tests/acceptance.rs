//! Acceptance criteria 1-10, one PASS/FAIL line each.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use nalgebra::{DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;

use qcrb::bounds::sandwich;
use qcrb::fixtures::fixture;
use qcrb::gaussian::{self, GaussianMeasurement, GaussianShiftModel};
use qcrb::holevo::{self, HolevoOptions};
use qcrb::linalg::{
    belavkin_grishanin_gap, pauli_x, pauli_y, pauli_z, weighted_tracenorm_check, CMatrix,
    HermitianOperator, RMatrix, DEFAULT_RANK_TOL,
};
use qcrb::povm::{self, DiscretePovm};
use qcrb::random::{self, rng_from_seed, ModelRng, RandomModelSpec};
use qcrb::{sld, QuantumModel};

struct Outcome {
    pass: bool,
    detail: String,
}

fn criterion(id: usize, name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = f();
    println!(
        "[{}] criterion {id:>2} {name}: {} ({:.1} s)",
        if outcome.pass { "PASS" } else { "FAIL" },
        outcome.detail,
        start.elapsed().as_secs_f64()
    );
    outcome.pass
}

fn tangent_dim(d: usize, rank: usize) -> usize {
    d * d - (d - rank) * (d - rank) - 1
}

/// Varied feasible model recipes: dimensions 2-4, some rank-deficient states,
/// some redundant parameters.
fn varied_spec(i: usize, q_one: bool) -> RandomModelSpec {
    let d = 2 + i % 3;
    let rank = if i % 4 == 3 { d - 1 } else { d };
    let mut p = 1 + (i / 3) % 4;
    let redundant = usize::from(i % 5 == 4 && p >= 2);
    p = p.min(tangent_dim(d, rank) + redundant);
    let independent = p - redundant;
    let q = if q_one { 1 } else { 1 + (i / 12) % independent };
    RandomModelSpec {
        rank: Some(rank),
        redundant,
        ..RandomModelSpec::full_rank(d, p, q)
    }
}

fn sandwich_chain() -> Outcome {
    let start = Instant::now();
    let opts = HolevoOptions::default();
    let (mut lower, mut upper, mut top, mut gap) = (f64::MIN, f64::MIN, f64::MIN, 0.0f64);
    let mut failures = 0;
    let n = 240;
    for i in 0..n {
        let model = random::random_model(&mut rng_from_seed(1000 + i as u64), &varied_spec(i, false)).unwrap();
        let Ok((closed, sol)) = holevo::holevo_bound(&model, &opts) else {
            failures += 1;
            continue;
        };
        if holevo::verify_solution(&model, &closed, &sol).is_err() {
            failures += 1;
        }
        lower = lower.max(closed.c_gs - sol.c_h);
        upper = upper.max(sol.c_h - closed.c_d);
        top = top.max(closed.c_d - closed.two_c_gs());
        gap = gap.max(sol.duality_gap);
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        pass: failures == 0 && lower <= 1e-7 && upper <= 1e-7 && top <= 1e-7 && gap <= 1e-8 && secs <= 300.0,
        detail: format!(
            "{n} models, max(c_gs - c_h) {lower:.2e}, max(c_h - c_d) {upper:.2e}, max(c_d - 2c_gs) {top:.2e}, max gap {gap:.2e}, {failures} solver/verification failures"
        ),
    }
}

fn scalar_collapse() -> Outcome {
    let opts = HolevoOptions::default();
    let mut worst = 0.0f64;
    let mut failures = 0;
    let n = 120;
    for i in 0..n {
        let model = random::random_model(&mut rng_from_seed(5000 + i as u64), &varied_spec(i, true)).unwrap();
        match holevo::holevo_bound(&model, &opts) {
            Ok((closed, sol)) => worst = worst.max((sol.c_h - closed.c_gs).abs()),
            Err(_) => failures += 1,
        }
    }
    Outcome {
        pass: failures == 0 && worst <= 1e-6,
        detail: format!("{n} q = 1 models, max |c_h - c_gs| {worst:.2e}"),
    }
}

fn pure_state_saturation() -> Outcome {
    let mut rng = rng_from_seed(77);
    let opts = HolevoOptions::default();
    let (mut h_dev, mut d_dev) = (0.0f64, 0.0f64);
    let mut failures = 0;
    let n = 24;
    for _ in 0..n {
        let theta = rng.random_range(0.1..PI - 0.1);
        let phi = rng.random_range(0.0..2.0 * PI);
        let model = fixture("pure_qubit_angles", &[theta, phi]).unwrap();
        match holevo::holevo_bound(&model, &opts) {
            Ok((closed, sol)) => {
                h_dev = h_dev.max((sol.c_h / closed.c_gs - 2.0).abs());
                d_dev = d_dev.max((closed.c_d / closed.c_gs - 2.0).abs());
            }
            Err(_) => failures += 1,
        }
    }
    Outcome {
        pass: failures == 0 && h_dev <= 1e-4 && d_dev <= 1e-8,
        detail: format!("{n} pure qubit models, max |c_h/c_gs - 2| {h_dev:.2e}, max |c_d/c_gs - 2| {d_dev:.2e}"),
    }
}

fn gaussian_half_qfim() -> Outcome {
    let mut rng = rng_from_seed(4242);
    let (mut dev, mut chain) = (0.0f64, 0.0f64);
    let mut failures = 0;
    let n = 120;
    for i in 0..n {
        let k = 1 + i % 4;
        let p = 1 + (i / 4) % 6;
        let cm = random::random_covariance(&mut rng, k);
        let dr = random::random_real(&mut rng, 2 * k, p);
        let rank = p.min(2 * k);
        let q = 1 + i % rank;
        // Columns of dbeta in the row space of dr keep every target estimable.
        let dbeta = dr.transpose() * random::random_real(&mut rng, 2 * k, q);
        let weight = random::random_weight(&mut rng, q);
        let model = GaussianShiftModel::new(k, dr, cm.clone(), DVector::zeros(2 * k), Some(dbeta), Some(weight), "")
            .unwrap();
        let check = gaussian::half_qfim_check(&model).unwrap();
        dev = dev.max(check.max_dev);
        let matched = GaussianMeasurement::new(cm).unwrap();
        match (gaussian::classical_bound(&model, &matched), gaussian::helstrom_bound(&model)) {
            (Ok(f), Ok(c_gs)) => chain = chain.max((f - 2.0 * c_gs).abs()),
            _ => failures += 1,
        }
    }
    Outcome {
        pass: failures == 0 && dev <= 1e-10 && chain <= 1e-9,
        detail: format!(
            "{n} shift models, max |F - J/2| {dev:.2e}, max |tr W dbeta^T F^+ dbeta - 2 c_gs| {chain:.2e}"
        ),
    }
}

fn fixture_values() -> Outcome {
    let mut worst = 0.0f64;
    for z in [0.0, 0.25, 0.5, 0.75, 0.9] {
        let b = sandwich(&fixture("qubit_xy_at_z", &[z]).unwrap(), DEFAULT_RANK_TOL).unwrap();
        worst = worst.max((b.c_gs - 2.0).abs()).max((b.c_d - 2.0 - 2.0 * z).abs());
    }
    let vac = GaussianShiftModel::vacuum_displacement();
    let j = gaussian::gaussian_qfim(&vac).unwrap();
    let f = gaussian::gaussian_fim(&vac, &GaussianMeasurement::heterodyne(1)).unwrap();
    let gauss = (j - RMatrix::identity(2, 2).scale(2.0)).amax().max((f - RMatrix::identity(2, 2)).amax());
    Outcome {
        pass: worst <= 1e-9 && gauss <= 1e-12,
        detail: format!("qubit_xy_at_z max deviation {worst:.2e}, vacuum J/F deviation {gauss:.2e}"),
    }
}

fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    (a * b).trace()
}

fn psd_sqrt(w: &RMatrix) -> RMatrix {
    let eig = SymmetricEigen::new(w.clone());
    let s = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    &eig.eigenvectors * RMatrix::from_diagonal(&s) * eig.eigenvectors.transpose()
}

/// Orthonormal basis of the null space of `a`, from the eigenvectors of `a^T a`.
fn null_basis(a: &RMatrix) -> RMatrix {
    let eig = SymmetricEigen::new(a.transpose() * a);
    let scale = eig.eigenvalues.amax().max(1e-300);
    let cols: Vec<_> = (0..eig.eigenvalues.len())
        .filter(|&i| eig.eigenvalues[i] <= 1e-12 * scale)
        .map(|i| eig.eigenvectors.column(i).into_owned())
        .collect();
    if cols.is_empty() {
        return RMatrix::zeros(a.ncols(), 0);
    }
    RMatrix::from_columns(&cols)
}

/// Holevo objective over Pauli-basis coefficients satisfying local unbiasedness,
/// parameterized independently of the library's SDP construction.
struct DirectObjective {
    rho: CMatrix,
    basis: Vec<CMatrix>,
    weight: RMatrix,
    sqrt_w: RMatrix,
    particular: Vec<DVector<f64>>,
    null: RMatrix,
}

impl DirectObjective {
    fn new(model: &QuantumModel) -> Self {
        let basis: Vec<CMatrix> = [HermitianOperator::identity(2), pauli_x(), pauli_y(), pauli_z()]
            .iter()
            .map(|b| b.matrix().clone())
            .collect();
        let rho = model.rho().matrix().clone();
        let p = model.num_params();
        let mut a = RMatrix::zeros(1 + p, 4);
        for (k, b) in basis.iter().enumerate() {
            a[(0, k)] = trace_product(&rho, b).re;
            for j in 0..p {
                a[(1 + j, k)] = trace_product(model.drho()[j].matrix(), b).re;
            }
        }
        let svd = a.clone().svd(true, true);
        let particular = (0..model.num_targets())
            .map(|s| {
                let mut rhs = DVector::zeros(1 + p);
                for j in 0..p {
                    rhs[1 + j] = model.dbeta()[(j, s)];
                }
                svd.solve(&rhs, 1e-12).unwrap()
            })
            .collect();
        Self {
            rho,
            basis,
            weight: model.weight().clone(),
            sqrt_w: psd_sqrt(model.weight()),
            particular,
            null: null_basis(&a),
        }
    }

    fn dim(&self) -> usize {
        self.null.ncols() * self.particular.len()
    }

    fn value(&self, y: &DVector<f64>) -> f64 {
        let m = self.null.ncols();
        let ops: Vec<CMatrix> = self
            .particular
            .iter()
            .enumerate()
            .map(|(s, x0)| {
                let c = x0 + &self.null * y.rows(s * m, m);
                self.basis
                    .iter()
                    .enumerate()
                    .fold(CMatrix::zeros(2, 2), |acc, (k, b)| acc + b.scale(c[k]))
            })
            .collect();
        let q = ops.len();
        let z = CMatrix::from_fn(q, q, |s, t| trace_product(&self.rho, &(&ops[s] * &ops[t])));
        let re = z.map(|v| v.re);
        let im = z.map(|v| v.im);
        let im = &self.sqrt_w * im * &self.sqrt_w;
        (&self.weight * re).trace() + im.singular_values().sum()
    }
}

fn nelder_mead(f: &dyn Fn(&DVector<f64>) -> f64, x0: DVector<f64>, step: f64, iters: usize) -> (DVector<f64>, f64) {
    let n = x0.len();
    let mut simplex: Vec<(DVector<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.clone(), f(&x0)));
    for i in 0..n {
        let mut x = x0.clone();
        x[i] += step;
        let v = f(&x);
        simplex.push((x, v));
    }
    for _ in 0..iters {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if (simplex[n].1 - simplex[0].1).abs() <= 1e-15 * simplex[0].1.abs().max(1.0) {
            break;
        }
        let centroid = simplex[..n].iter().fold(DVector::zeros(n), |acc, (x, _)| acc + x) / n as f64;
        let worst = simplex[n].clone();
        let reflect = &centroid + (&centroid - &worst.0);
        let fr = f(&reflect);
        if fr < simplex[0].1 {
            let expand = &centroid + (&reflect - &centroid) * 2.0;
            let fe = f(&expand);
            simplex[n] = if fe < fr { (expand, fe) } else { (reflect, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflect, fr);
        } else {
            let contract = if fr < worst.1 {
                &centroid + (&reflect - &centroid) * 0.5
            } else {
                &centroid + (&worst.0 - &centroid) * 0.5
            };
            let fc = f(&contract);
            if fc < worst.1.min(fr) {
                simplex[n] = (contract, fc);
            } else {
                let best = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let x = &best + (&entry.0 - &best) * 0.5;
                    let v = f(&x);
                    *entry = (x, v);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex.swap_remove(0)
}

fn direct_minimum(objective: &DirectObjective, rng: &mut ModelRng) -> f64 {
    let f = |y: &DVector<f64>| objective.value(y);
    let n = objective.dim();
    let mut best = f64::INFINITY;
    for _ in 0..8 {
        let mut x = DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0));
        let mut step = 0.5;
        for _ in 0..6 {
            let (xn, v) = nelder_mead(&f, x, step, 4000);
            x = xn;
            best = best.min(v);
            step *= 0.1;
        }
    }
    best
}

fn oracle_equivalence() -> Outcome {
    let opts = HolevoOptions::default();
    let mut rng = rng_from_seed(606);
    let mut worst = 0.0f64;
    let n = 20;
    for seed in 0..n {
        let model = fixture("random_full_rank", &[seed as f64, 2.0, 2.0, 2.0]).unwrap();
        let (_, sol) = holevo::holevo_bound(&model, &opts).unwrap();
        let direct = direct_minimum(&DirectObjective::new(&model), &mut rng);
        worst = worst.max((direct - sol.c_h).abs());
    }
    Outcome {
        pass: worst <= 1e-5,
        detail: format!("{n} seeded d = 2, p = q = 2 models, max |SDP - Nelder-Mead| {worst:.2e}"),
    }
}

fn matrix_crbs() -> Outcome {
    let opts = HolevoOptions::default();
    let mut rng = rng_from_seed(9090);
    let (mut dv_min, mut dz_min, mut excess) = (f64::MAX, f64::MAX, f64::MAX);
    let mut failures = 0;
    let n = 120;
    for i in 0..n {
        let d = 2 + i % 3;
        let rank = if d > 2 && i % 4 == 1 { d - 1 } else { d };
        let p = (1 + (i / 3) % 3).min(tangent_dim(d, rank));
        let q = 1 + i % p;
        let spec = RandomModelSpec {
            rank: Some(rank),
            ..RandomModelSpec::full_rank(d, p, q)
        };
        let model = random::random_model(&mut rng, &spec).unwrap();
        let outcomes = d * d + i % 3;
        let elements = random::random_povm_elements(&mut rng, d, outcomes, 1);
        let beta = DVector::from_fn(q, |_, _| rng.random_range(-1.0..1.0));
        let Ok(efficient) = DiscretePovm::with_locally_unbiased_estimates(elements.clone(), &model, &beta) else {
            failures += 1;
            continue;
        };
        // Shift the estimates along directions that keep local unbiasedness.
        let probs = povm::born_probs(&efficient, model.rho()).unwrap();
        let mut a = RMatrix::zeros(1 + p, outcomes);
        for x in 0..outcomes {
            a[(0, x)] = probs[x];
            for j in 0..p {
                a[(1 + j, x)] = model.drho()[j].trace_product(&elements[x]);
            }
        }
        let null = null_basis(&a);
        let shift = &null * random::random_real(&mut rng, null.ncols(), q) * 0.5;
        let measurement = DiscretePovm::new(elements, efficient.estimates() + shift).unwrap();
        let (Ok((dv, dz)), Ok((_, sol))) = (
            povm::matrix_crb_check(&measurement, &model, &beta),
            holevo::holevo_bound(&model, &opts),
        ) else {
            failures += 1;
            continue;
        };
        let sigma = povm::error_covariance(&measurement, model.rho(), &beta).unwrap();
        dv_min = dv_min.min(dv);
        dz_min = dz_min.min(dz);
        excess = excess.min((model.weight() * sigma).trace() - sol.c_h);
    }
    Outcome {
        pass: failures == 0 && dv_min >= -1e-9 && dz_min >= -1e-9 && excess >= -1e-6,
        detail: format!(
            "{n} POVM/model pairs, min eig(Sigma - V) {dv_min:.2e}, min eig(Sigma - Z) {dz_min:.2e}, min(tr W Sigma - c_h) {excess:.2e}"
        ),
    }
}

fn matrix_inequalities() -> Outcome {
    let mut rng = rng_from_seed(31337);
    let mut bg = f64::MAX;
    let mut tn = f64::MIN;
    let n = 1000;
    for i in 0..n {
        let dim = 1 + i % 8;
        let rank = 1 + (i / 8) % dim;
        let a = random::random_psd(&mut rng, dim, rank);
        bg = bg.min(belavkin_grishanin_gap(&a).unwrap());
        let m = 1 + i % 6;
        let w = random::random_weight(&mut rng, m);
        let g = random::random_real(&mut rng, m, m);
        let (lhs, rhs) = weighted_tracenorm_check(&w, &(&g - g.transpose())).unwrap();
        tn = tn.max(lhs - rhs);
    }
    Outcome {
        pass: bg >= -1e-9 && tn <= 1e-9,
        detail: format!("{n} PSD matrices, min Belavkin-Grishanin gap {bg:.2e}; {n} (W, A) pairs, max excess {tn:.2e}"),
    }
}

fn feasibility_predicate() -> Outcome {
    let mut rng = rng_from_seed(2718);
    let mut disagreements = 0;
    let (mut feasible, mut infeasible) = (0, 0);
    let n = 240;
    for i in 0..n {
        let d = 2 + i % 3;
        let p = 2 + (i / 3) % 3;
        let redundant = 1 + usize::from(p >= 3 && i % 2 == 1);
        let independent = p - redundant;
        let q = 1 + (i / 2) % independent;
        let spec = RandomModelSpec {
            redundant,
            ..RandomModelSpec::full_rank(d, p, q)
        };
        let model = random::random_model(&mut rng, &spec).unwrap();
        let slds = sld::compute_slds(&model, DEFAULT_RANK_TOL).unwrap();
        let info = sld::information(&model, &slds, DEFAULT_RANK_TOL).unwrap();
        assert!(info.qfim_rank < p);
        let dbeta = if i % 2 == 0 {
            model.dbeta().clone()
        } else {
            random::random_real(&mut rng, p, q)
        };
        let predicate = sld::feasibility(&info, &dbeta, 1e-8).unwrap();
        // Least-squares oracle: project onto the column space spanned by the
        // leading left singular vectors of J.
        let svd = info.qfim.clone().svd(true, false);
        let u = svd.u.unwrap();
        let smax = svd.singular_values.max();
        let cols: Vec<_> = (0..p)
            .filter(|&k| svd.singular_values[k] > 1e-10 * smax)
            .map(|k| u.column(k).into_owned())
            .collect();
        let range = RMatrix::from_columns(&cols);
        let residual = (&dbeta - &range * (range.transpose() * &dbeta)).amax();
        let oracle = residual <= 1e-8;
        if oracle {
            feasible += 1;
        } else {
            infeasible += 1;
        }
        if oracle != predicate {
            disagreements += 1;
        }
    }
    Outcome {
        pass: disagreements == 0,
        detail: format!(
            "{n} singular-J instances ({feasible} feasible, {infeasible} infeasible), {disagreements} disagreements"
        ),
    }
}

fn run_cli(args: &[&str]) -> (i32, Vec<u8>) {
    let output = Command::new(env!("CARGO_BIN_EXE_qcrb"))
        .args(args)
        .output()
        .expect("binary runs");
    (output.status.code().unwrap_or(-1), output.stdout)
}

fn cli_suite(dir: &Path) -> Vec<u8> {
    let model = dir.join("model.json");
    let gauss = dir.join("gauss.json");
    let povm_path = dir.join("povm.json");
    let (m, g, pv) = (model.to_str().unwrap(), gauss.to_str().unwrap(), povm_path.to_str().unwrap());
    let mut report = Vec::new();
    let commands: Vec<Vec<&str>> = vec![
        vec!["fixtures", "list", "--format", "json"],
        vec!["fixtures", "export", "random_full_rank", "--seed", "17", "--params", "3,3,2", "-o", m],
        vec!["bounds", m, "--format", "json", "--include-x"],
        vec!["bounds", m, "--format", "csv", "--basis", "full"],
        vec!["bounds", "--fixture", "qubit_bloch", "--params", "0.1,0.2,0.3"],
        vec!["bounds", "--fixture", "pure_qubit_angles", "--params", "1.1,0.4", "--format", "json"],
        vec!["sweep", "qubit_xy_at_z", "--grid", "0:0.9:10"],
        vec!["sweep", "random_full_rank", "--seed", "3", "--values", "2,3", "--fixed", "2,1", "--format", "json"],
        vec!["gaussian", g, "--format", "json"],
        vec!["check-povm", pv, m, "--beta", "0.1,-0.2", "--format", "json"],
    ];
    for args in commands {
        if args[0] == "gaussian" {
            let mut rng = rng_from_seed(88);
            let cm = random::random_covariance(&mut rng, 2);
            let dr = random::random_real(&mut rng, 4, 3);
            let model = GaussianShiftModel::new(2, dr, cm, DVector::zeros(4), None, None, "seeded").unwrap();
            gaussian::save_gaussian_model(&model, &gauss).unwrap();
        }
        if args[0] == "check-povm" {
            let mut rng = rng_from_seed(99);
            let loaded = qcrb::model::load_model(&model).unwrap();
            let elements = random::random_povm_elements(&mut rng, loaded.dim(), 10, 1);
            let beta = DVector::from_vec(vec![0.1, -0.2]);
            let measurement = DiscretePovm::with_locally_unbiased_estimates(elements, &loaded, &beta).unwrap();
            povm::save_povm(&measurement, &povm_path).unwrap();
        }
        let (code, stdout) = run_cli(&args);
        report.extend_from_slice(format!("$ {} -> {code}\n", args.join(" ")).as_bytes());
        report.extend_from_slice(&stdout);
        if args[0] == "fixtures" && args[1] == "export" {
            report.extend_from_slice(&std::fs::read(&model).unwrap());
        }
    }
    report
}

fn determinism() -> Outcome {
    let first_dir = tempfile::tempdir().unwrap();
    let second_dir = tempfile::tempdir().unwrap();
    let first = cli_suite(first_dir.path());
    let second = cli_suite(second_dir.path());
    let normalize = |bytes: &[u8], dir: &Path| {
        String::from_utf8_lossy(bytes).replace(dir.to_str().unwrap(), "<dir>")
    };
    let a = normalize(&first, first_dir.path());
    let b = normalize(&second, second_dir.path());
    let failed = a.lines().filter(|l| l.starts_with("$ ") && !l.ends_with("-> 0")).count();
    Outcome {
        pass: a == b && failed == 0,
        detail: format!(
            "10 commands, {} report bytes, identical: {}, nonzero exits: {failed}",
            a.len(),
            a == b
        ),
    }
}

fn main() {
    let results = [
        criterion(1, "sandwich chain", sandwich_chain),
        criterion(2, "scalar collapse", scalar_collapse),
        criterion(3, "pure-state saturation", pure_state_saturation),
        criterion(4, "Gaussian half-QFIM", gaussian_half_qfim),
        criterion(5, "fixture values", fixture_values),
        criterion(6, "oracle equivalence", oracle_equivalence),
        criterion(7, "matrix CRBs", matrix_crbs),
        criterion(8, "matrix inequalities", matrix_inequalities),
        criterion(9, "feasibility predicate", feasibility_predicate),
        criterion(10, "determinism", determinism),
    ];
    let passed = results.iter().filter(|&&r| r).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
