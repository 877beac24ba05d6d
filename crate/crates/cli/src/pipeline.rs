use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use serde::Serialize;

use nfforge_core::integrability::{
    check_integrability, check_nondegeneracy, eval_real_f64, singular_locus_2d, IntegrabilityCheck, NondegeneracyReport,
};
use nfforge_core::invariants::{canonical_linear_field, hilbert_basis, invariant_generators, ResonanceProblem, DEFAULT_DEGREE_CAP};
use nfforge_core::normalform::{
    first_integral_transport, geometric_normalize, normalize_unchecked, verify_normal_form, GeometricNormalForm, Obstruction,
};
use nfforge_core::numverify::{
    conjugacy_residual_scan, conservation_residual, integrate_flow_with, period_flatness_scan, sample_directions,
    singular_locus_scan_2d, CompiledSeries, IntegratorOptions, LocusPoint, NumericField, PeriodOptions, ResidualCurve,
    DEFAULT_LOCUS_TOL, DEFAULT_RADII,
};
use nfforge_core::series::Term;
use nfforge_core::spectrum::{eigenvalues_numeric, lambda_f64, SpectrumCase, SpectrumClass};
use nfforge_core::{NormalizeError, NumericError};

use crate::format::{rational_string, LoadedSystem};
use crate::{CliError, EXIT_HYPOTHESIS, EXIT_NUMERIC, EXIT_OK};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Classify,
    Invariants,
    Normalize,
    Verify,
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Classify => "classify",
            Command::Invariants => "invariants",
            Command::Normalize => "normalize",
            Command::Verify => "verify",
            Command::Report => "report",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunOptions {
    pub order: Option<u32>,
    pub radii: Option<Vec<f64>>,
    pub seed: u64,
}

pub const DEFAULT_PERIOD_RADII: [f64; 4] = [0.1, 0.05, 0.025, 0.0125];
pub const DEFAULT_FLATNESS_EXPONENT: f64 = 4.0;
pub const CONSERVATION_TOL: f64 = 1e-6;
pub const LOCUS_AGREEMENT_TOL: f64 = 1e-6;

#[derive(Clone, Debug, Serialize)]
pub struct Classification {
    pub case: SpectrumCase,
    pub k: usize,
    pub m: Vec<i64>,
    pub lambda: f64,
    /// `[re, im]` pairs, repeated by multiplicity.
    pub eigenvalues: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, Serialize)]
pub struct InvariantsSection {
    pub hilbert_basis: Vec<Vec<u32>>,
    /// Real generators in the canonical coordinates.
    pub generators: Vec<Vec<Term>>,
    pub annihilated_by_linear_part: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct NormalFormSection {
    pub order: u32,
    pub residual_order: u32,
    pub lambda: String,
    /// Columns are the canonical basis in the input coordinates.
    pub t: Vec<Vec<String>>,
    pub phi: Vec<Vec<Term>>,
    pub f: Vec<Term>,
    pub residual_zero: bool,
    pub f_at_origin_is_one: bool,
    pub f_is_invariant: bool,
    /// `Fᵢ ∘ Φ⁻¹` written in the real invariant generators.
    pub transported_integrals: Vec<Option<Vec<Term>>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ObstructionSection {
    pub degree: u32,
    pub leftover: Vec<Vec<Term>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConservationSection {
    pub horizon: f64,
    pub radius: f64,
    pub rtol: f64,
    pub atol: f64,
    pub drifts: Vec<f64>,
    pub max_drift: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct LocusSection {
    pub points: Vec<LocusPoint>,
    pub jet_x: Vec<f64>,
    pub max_jet_deviation: f64,
    pub max_field_norm: f64,
    pub max_second_difference: f64,
    pub jet_s_equals_s1: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct NumericSummary {
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conservation: Option<ConservationSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conjugacy: Option<ResidualCurve>,
    /// Period deviation of `X / (F ∘ Φ)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub period: Option<ResidualCurve>,
    /// Period deviation of `X` itself; the factor shows up at order 2, so no verdict.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub period_unscaled: Option<ResidualCurve>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub locus: Option<LocusSection>,
    pub errors: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: &'static str,
    pub name: String,
    pub dimension: usize,
    pub order: u32,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub integrability: Option<IntegrabilityCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classification: Option<Classification>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nondegeneracy: Option<NondegeneracyReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub invariants: Option<InvariantsSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normal_form: Option<NormalFormSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub obstruction: Option<ObstructionSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub numeric: Option<NumericSummary>,
    pub verdicts: BTreeMap<String, bool>,
    pub diagnostics: Vec<String>,
    pub exit_code: i32,
}

/// One CSV file `scan_<name>.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct Sidecar {
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub report: Report,
    pub sidecars: Vec<Sidecar>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        self.report.exit_code
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.report).expect("report serializes") + "\n"
    }
}

struct Ctx<'a> {
    loaded: &'a LoadedSystem,
    opts: &'a RunOptions,
    report: Report,
    sidecars: Vec<Sidecar>,
}

impl Ctx<'_> {
    fn fail(&mut self, code: i32, msg: String) {
        self.report.diagnostics.push(msg);
        self.report.exit_code = self.report.exit_code.max(code);
    }

    fn verdict(&mut self, name: &str, pass: bool, code: i32) {
        self.report.verdicts.insert(name.to_string(), pass);
        if !pass {
            self.report.exit_code = self.report.exit_code.max(code);
        }
    }
}

pub fn run(cmd: Command, loaded: &LoadedSystem, opts: &RunOptions) -> Outcome {
    let sys = &loaded.system;
    let report = Report {
        command: cmd.name(),
        name: loaded.name.clone(),
        dimension: sys.dim(),
        order: opts.order.unwrap_or(sys.order()).min(sys.order()),
        warnings: loaded.warnings.clone(),
        integrability: None,
        classification: None,
        nondegeneracy: None,
        invariants: None,
        normal_form: None,
        obstruction: None,
        numeric: None,
        verdicts: BTreeMap::new(),
        diagnostics: Vec::new(),
        exit_code: EXIT_OK,
    };
    let mut ctx = Ctx { loaded, opts, report, sidecars: Vec::new() };
    let class = classify(&mut ctx, cmd == Command::Classify);
    if matches!(cmd, Command::Invariants | Command::Report) {
        invariants(&mut ctx, class.as_ref());
    }
    if matches!(cmd, Command::Normalize | Command::Verify | Command::Report) {
        if let Some(nf) = normalize(&mut ctx) {
            if matches!(cmd, Command::Verify | Command::Report) {
                numeric(&mut ctx, &nf);
            }
        }
    }
    Outcome { report: ctx.report, sidecars: ctx.sidecars }
}

fn classify(ctx: &mut Ctx<'_>, strict: bool) -> Option<SpectrumClass> {
    let sys = &ctx.loaded.system;
    ctx.report.integrability = check_integrability(&sys.x, &sys.first_integrals).ok();
    let nd = check_nondegeneracy(sys);
    let eig = sys.real_linear_part().and_then(|a| eigenvalues_numeric(&a).ok());
    let class = nd.case.clone();
    if let Some(c) = &class {
        ctx.report.classification = Some(Classification {
            case: c.case,
            k: c.k,
            m: c.m.clone(),
            lambda: c.lambda,
            eigenvalues: eig
                .map(|s| {
                    s.eigenvalues
                        .iter()
                        .zip(&s.multiplicities)
                        .flat_map(|(z, &k)| std::iter::repeat([z.re, z.im]).take(k))
                        .collect()
                })
                .unwrap_or_default(),
        });
    }
    let passes = nd.passes();
    if strict {
        ctx.verdict("nondegeneracy", passes, EXIT_HYPOTHESIS);
        if !passes {
            ctx.report.diagnostics.extend(nd.diagnostics.iter().cloned());
        }
    } else {
        ctx.report.verdicts.insert("nondegeneracy".into(), passes);
    }
    ctx.report.nondegeneracy = Some(nd);
    class
}

fn invariants(ctx: &mut Ctx<'_>, class: Option<&SpectrumClass>) {
    let Some(class) = class else {
        ctx.fail(EXIT_HYPOTHESIS, "no spectrum class: invariants need a classified linear part".into());
        return;
    };
    let order = ctx.report.order;
    match hilbert_basis(&ResonanceProblem { m: class.m.clone() }, DEFAULT_DEGREE_CAP) {
        Ok(hb) => {
            let gens = invariant_generators(class, &hb, order);
            let x1 = canonical_linear_field(class, order);
            let annihilated = gens.real_forms.iter().all(|q| x1.lie_derivative(q).is_ok_and(|d| d.is_zero()));
            ctx.report.invariants = Some(InvariantsSection {
                hilbert_basis: hb.generators.iter().map(|e| e.to_vec()).collect(),
                generators: gens.real_forms.iter().map(|q| q.to_terms()).collect(),
                annihilated_by_linear_part: annihilated,
            });
            ctx.verdict("invariants_annihilated", annihilated, EXIT_HYPOTHESIS);
        }
        Err(e) => ctx.fail(EXIT_HYPOTHESIS, format!("invariants: {e}")),
    }
}

fn obstruction_section(ob: &Obstruction) -> ObstructionSection {
    ObstructionSection { degree: ob.degree, leftover: ob.leftover.clone() }
}

fn normalize(ctx: &mut Ctx<'_>) -> Option<GeometricNormalForm> {
    let sys = &ctx.loaded.system;
    let order = ctx.report.order;
    match geometric_normalize(sys, order) {
        Ok(nf) => {
            let check = verify_normal_form(sys, &nf).ok();
            let transported = first_integral_transport(sys, &nf)
                .map(|ts| ts.into_iter().map(|t| t.in_generators.map(|g| g.to_terms())).collect())
                .unwrap_or_default();
            let accepted = check.as_ref().is_some_and(|c| c.accepted());
            let n = nf.t.rows();
            ctx.report.normal_form = Some(NormalFormSection {
                order,
                residual_order: nf.residual_order,
                lambda: rational_string(&nf.lambda),
                t: (0..n).map(|i| (0..n).map(|j| rational_string(nf.t.get(i, j))).collect()).collect(),
                phi: nf.phi.components().iter().map(|c| c.to_terms()).collect(),
                f: nf.f.to_terms(),
                residual_zero: check.as_ref().is_some_and(|c| c.residual.is_zero()),
                f_at_origin_is_one: check.as_ref().is_some_and(|c| c.f_at_origin_is_one),
                f_is_invariant: check.as_ref().is_some_and(|c| c.f_is_invariant),
                transported_integrals: transported,
            });
            ctx.verdict("normal_form", accepted, EXIT_HYPOTHESIS);
            accepted.then_some(nf)
        }
        Err(e) => {
            if let NormalizeError::ObstructionNonzero { .. } | NormalizeError::HypothesisViolation(_) = &e {
                // locate the first degree where the normalizer gets stuck, if it can run at all
                if let Ok(nf) = normalize_unchecked(sys, order) {
                    if let Some(ob) = &nf.obstruction {
                        ctx.report.obstruction = Some(obstruction_section(ob));
                    }
                }
            }
            ctx.report.verdicts.insert("normal_form".into(), false);
            ctx.fail(EXIT_HYPOTHESIS, format!("normalize: {e}"));
            None
        }
    }
}

fn characteristic_time(class: &SpectrumClass) -> f64 {
    let nonzero = class.m.iter().filter(|m| **m != 0).map(|m| m.unsigned_abs() as f64);
    if class.is_elliptic() {
        2.0 * PI / (class.lambda * nonzero.fold(f64::INFINITY, f64::min))
    } else {
        1.0 / (class.lambda * nonzero.fold(0.0, f64::max))
    }
}

fn curve_sidecar(c: &ResidualCurve) -> Sidecar {
    Sidecar { name: c.name.clone(), header: vec!["radius", "value"], rows: c.rows().map(|(r, v)| vec![r, v]).collect() }
}

fn numeric(ctx: &mut Ctx<'_>, nf: &GeometricNormalForm) {
    let sys = &ctx.loaded.system;
    let num = &ctx.loaded.numeric;
    let seed = ctx.opts.seed;
    let mut out = NumericSummary { seed, ..Default::default() };
    let field = match NumericField::from_jet(&sys.x) {
        Ok(f) => f,
        Err(e) => {
            ctx.fail(EXIT_NUMERIC, format!("numeric field: {e}"));
            return;
        }
    };
    let class = nf.class.clone();
    let samples = num.samples.unwrap_or(16);

    // conservation over five characteristic times
    let rtol = num.rtol.unwrap_or(1e-10);
    let atol = num.atol.unwrap_or(1e-16);
    let radius = num.conservation_radius.unwrap_or(0.05);
    let horizon = 5.0 * characteristic_time(&class);
    let integrals: Result<Vec<CompiledSeries>, NumericError> = sys.first_integrals.iter().map(CompiledSeries::new).collect();
    let conservation = integrals.and_then(|fs| {
        let opts = IntegratorOptions { rtol, atol, ..Default::default() };
        sample_directions(sys.dim(), 4, seed)
            .iter()
            .map(|d| {
                let x0: Vec<f64> = d.iter().map(|v| radius * v).collect();
                integrate_flow_with(&field, &x0, horizon, opts).map(|tr| conservation_residual(&tr, &fs))
            })
            .collect::<Result<Vec<f64>, _>>()
    });
    match conservation {
        Ok(drifts) => {
            let max_drift = drifts.iter().copied().fold(0.0, f64::max);
            let pass = max_drift < CONSERVATION_TOL;
            out.conservation = Some(ConservationSection {
                horizon,
                radius,
                rtol,
                atol,
                drifts,
                max_drift,
                tolerance: CONSERVATION_TOL,
                pass,
            });
            ctx.verdict("conservation", pass, EXIT_NUMERIC);
        }
        Err(e) => {
            out.errors.push(format!("conservation: {e}"));
            ctx.verdict("conservation", false, EXIT_NUMERIC);
        }
    }

    let radii = ctx.opts.radii.clone().or_else(|| num.radii.clone()).unwrap_or_else(|| DEFAULT_RADII.to_vec());
    match conjugacy_residual_scan(&sys.x, nf, &radii, samples, seed) {
        Ok(c) => {
            ctx.verdict("conjugacy", c.pass, EXIT_NUMERIC);
            ctx.sidecars.push(curve_sidecar(&c));
            out.conjugacy = Some(c);
        }
        Err(e) => {
            out.errors.push(format!("conjugacy: {e}"));
            ctx.verdict("conjugacy", false, EXIT_NUMERIC);
        }
    }

    if class.is_elliptic() {
        let k = class.k;
        let n = sys.dim();
        let direction: Vec<f64> = (0..n).map(|i| lambda_f64(nf.t.get(i, k))).collect();
        let expected = 2.0 * PI / (class.m[k].unsigned_abs() as f64 * class.lambda);
        let pradii = num.period_radii.clone().unwrap_or_else(|| DEFAULT_PERIOD_RADII.to_vec());
        let popts = PeriodOptions::default();
        let divisor = nf.phi.apply(&nf.f).map_err(|e| NumericError::InvalidInput(e.to_string()));
        let scaled = divisor.and_then(|g| field.clone().divided_by(&g));
        let scan = |f: &NumericField, name: &str| {
            period_flatness_scan(f, class.lambda, &pradii, &direction, DEFAULT_FLATNESS_EXPONENT, Some(expected), &popts)
                .map(|(mut c, _)| {
                    c.name = name.to_string();
                    c
                })
        };
        match scaled.and_then(|y| scan(&y, "period")) {
            Ok(c) => {
                ctx.verdict("period", c.pass, EXIT_NUMERIC);
                ctx.sidecars.push(curve_sidecar(&c));
                out.period = Some(c);
            }
            Err(e) => {
                out.errors.push(format!("period: {e}"));
                ctx.verdict("period", false, EXIT_NUMERIC);
            }
        }
        match scan(&field, "period_unscaled") {
            Ok(c) => {
                ctx.sidecars.push(curve_sidecar(&c));
                out.period_unscaled = Some(c);
            }
            Err(e) => out.errors.push(format!("period_unscaled: {e}")),
        }
    }

    if let Some(loc) = locus(ctx, &field, &class) {
        ctx.verdict("locus", loc.pass, EXIT_NUMERIC);
        ctx.sidecars.push(Sidecar {
            name: "locus".into(),
            header: vec!["y", "x", "jet_x", "field_norm"],
            rows: loc.points.iter().zip(&loc.jet_x).map(|(p, j)| vec![p.y, p.x, *j, p.field_norm]).collect(),
        });
        out.locus = Some(loc);
    }
    ctx.report.numeric = Some(out);
}

fn locus(ctx: &mut Ctx<'_>, field: &NumericField, class: &SpectrumClass) -> Option<LocusSection> {
    let sys = &ctx.loaded.system;
    let a = sys.x.linear_part();
    let diagonal_first = !a.get(0, 0).is_zero() && a.get(0, 1).is_zero() && a.get(1, 0).is_zero() && a.get(1, 1).is_zero();
    if sys.dim() != 2 || class.case != SpectrumCase::WeakHyperbolic || !diagonal_first {
        return None;
    }
    let ygrid = ctx.loaded.numeric.locus_ygrid.clone().unwrap_or_else(|| (-10..=10).map(|i| i as f64 * 0.01).collect());
    let jet = match singular_locus_2d(&sys.x) {
        Ok(j) => j,
        Err(e) => {
            ctx.fail(EXIT_NUMERIC, format!("locus jet: {e}"));
            return None;
        }
    };
    let scan = match singular_locus_scan_2d(field, &ygrid, DEFAULT_LOCUS_TOL) {
        Ok(s) => s,
        Err(e) => {
            ctx.fail(EXIT_NUMERIC, format!("locus scan: {e}"));
            return None;
        }
    };
    let jet_x: Vec<f64> = ygrid.iter().map(|&y| eval_real_f64(&jet.curve, &[y])).collect();
    let max_jet_deviation = scan.points.iter().zip(&jet_x).map(|(p, j)| (p.x - j).abs()).fold(0.0, f64::max);
    let pass = max_jet_deviation <= LOCUS_AGREEMENT_TOL && !scan.violation && jet.s_equals_s1;
    Some(LocusSection {
        points: scan.points,
        jet_x,
        max_jet_deviation,
        max_field_norm: scan.max_field_norm,
        max_second_difference: scan.max_second_difference,
        jet_s_equals_s1: jet.s_equals_s1,
        pass,
    })
}

pub fn write_sidecars(dir: &Path, sidecars: &[Sidecar]) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Output(format!("{}: {e}", dir.display())))?;
    for s in sidecars {
        let path = dir.join(format!("scan_{}.csv", s.name));
        let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
        w.write_record(&s.header).map_err(|e| CliError::Output(e.to_string()))?;
        for row in &s.rows {
            w.write_record(row.iter().map(|v| format!("{v:e}"))).map_err(|e| CliError::Output(e.to_string()))?;
        }
        w.flush().map_err(|e| CliError::Output(e.to_string()))?;
    }
    Ok(())
}
