use clap::{Args, ValueEnum};
use conecap_core::capacity::{
    capacity_hyperboloid, capacity_interval, nonsqueezing_verdict, CapacityInterval, NonSqueezingReport, Verdict,
};
use conecap_core::contact::{
    audit_smoothing, random_isotopy, smoothed_symplectization, ContactHamiltonian, MetaAudit, SmoothingAudit,
    SmoothingCertificate, SupportMeta,
};
use conecap_core::domains::{audit_sandwich, Domain, DomainDoc, Hyperboloid, IntegrableDomain, SandwichAudit, SandwichCertificate, StarDomain};
use conecap_core::metric::{
    default_pool, dw_bound_check, equivalence_and_order, ConeFamily, DwCheck, QuotientReport, DEFAULT_GRID,
};
use conecap_core::orbits::{area_constant_a, bound_constant_b, scan_spectrum, ActionSpectrum, ScanOptions};
use conecap_core::sampling::stream;
use conecap_core::{metric::pseudo_distance, num17};
use serde::{Deserialize, Serialize};

use crate::config::{clap_defaults, RunConfig};
use crate::CliError;

/// Hamiltonian of the worked sandwich example; `M = 1`, `rho1 = 3`,
/// `rho0 = 0.1`, `m = 0.5`.
pub const WORKED: &str = "0.5*bump(rho; 1, 3) + 0.5*bump(rho; 1, 3)*x1^2";

macro_rules! clap_default {
    ($($t:ty),*) => {
        $(impl Default for $t {
            fn default() -> Self {
                clap_defaults()
            }
        })*
    };
}

clap_default!(SpectrumArgs, SandwichArgs, CapacityArgs, SqueezeArgs, MetricArgs, SmoothingArgs);

/// Result of a command: the JSON payload, an optional dedicated CSV body
/// and whether an audit or budget check failed.
pub struct Outcome {
    pub result: serde_json::Value,
    pub csv: Option<String>,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Ok,
    Budget(String),
    Audit(String),
}

fn outcome<T: Serialize>(result: &T, csv: Option<String>, status: Status) -> Result<Outcome, CliError> {
    let result = serde_json::to_value(result).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(Outcome { result, csv, status })
}

pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    match cfg.command.as_str() {
        "spectrum" => spectrum(cfg.params()?),
        "sandwich" => sandwich(cfg.params()?, cfg.seed),
        "capacity" => capacity(cfg.params()?),
        "squeeze" => squeeze(cfg.params()?, cfg),
        "metric" => metric(cfg.params()?, cfg.seed),
        "smoothing-audit" => smoothing(cfg.params()?, cfg),
        other => Err(CliError::Invalid(format!("unknown command {other:?}"))),
    }
}

fn meta(max: f64, rho1: f64, rho0: f64, min_inner: f64) -> SupportMeta {
    SupportMeta { max, rho1, rho0, min_inner }
}

// ---------------------------------------------------------------- spectrum

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, rename_all = "kebab-case")]
pub struct SpectrumArgs {
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, default_value_t = 1.0)]
    pub a: f64,
    #[arg(long, default_value_t = 1.0)]
    pub b: f64,
    /// Depth parameter of the well.
    #[arg(long = "C", default_value_t = 3.0)]
    #[serde(rename = "C")]
    pub c: f64,
    /// Blend half-width of the smoothed well.
    #[arg(long, default_value_t = 0.01)]
    pub eps: f64,
    /// Top of the action window.
    #[arg(long, default_value_t = 10.0)]
    pub top: f64,
    /// Approximate number of group-(ii) torus labels (0 skips the scan).
    #[arg(long, default_value_t = 1000)]
    pub labels: usize,
    /// Largest number of labels evaluated.
    #[arg(long, default_value_t = 100_000)]
    pub budget: usize,
}

#[derive(Serialize)]
struct SpectrumResult {
    domain: DomainDoc,
    #[serde(with = "num17")]
    area_constant: f64,
    #[serde(with = "num17")]
    bound_constant: f64,
    spectrum: ActionSpectrum,
}

fn spectrum(p: SpectrumArgs) -> Result<Outcome, CliError> {
    let d = IntegrableDomain::build(p.n, p.k, p.a, p.b, p.c, p.eps)?;
    let spec = if p.labels == 0 {
        conecap_core::orbits::characteristic_spectrum(&d, p.top)?
    } else {
        scan_spectrum(&d, p.top, ScanOptions { labels: p.labels, budget: p.budget })?
    };
    let status = match &spec.scan {
        Some(s) if s.partial => Status::Budget(format!("scan stopped after {} labels", s.labels)),
        Some(s) if s.violations > 0 => Status::Audit(format!("{} labels below the group-(ii) bound", s.violations)),
        _ => Status::Ok,
    };
    let res = SpectrumResult {
        domain: Domain::Integrable(d).to_doc()?,
        area_constant: area_constant_a(p.a, p.b)?,
        bound_constant: bound_constant_b(p.a, p.b)?,
        spectrum: spec,
    };
    outcome(&res, Some(res.spectrum.to_csv()), status)
}

// ---------------------------------------------------------------- sandwich

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, rename_all = "kebab-case")]
pub struct SandwichArgs {
    /// Hamiltonian expression (see the README for the grammar).
    #[arg(long, default_value = WORKED)]
    pub hamiltonian: String,
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// Declared maximum M.
    #[arg(long, default_value_t = 1.0)]
    pub max: f64,
    /// Angle ratio beyond which H vanishes.
    #[arg(long, default_value_t = 3.0)]
    pub rho1: f64,
    /// Angle ratio below which H >= m.
    #[arg(long, default_value_t = 0.1)]
    pub rho0: f64,
    /// Declared lower bound m near the equator.
    #[arg(long, default_value_t = 0.5)]
    pub min_inner: f64,
    /// Monte-Carlo samples of the containment audit.
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    /// Samples of the support-data audit.
    #[arg(long, default_value_t = 20_000)]
    pub meta_samples: usize,
}

#[derive(Serialize)]
struct SandwichResult {
    domain: DomainDoc,
    certificate: SandwichCertificate,
    #[serde(with = "num17::vec")]
    margins: Vec<f64>,
    capacity: CapacityInterval,
    meta_audit: MetaAudit,
    audit: SandwichAudit,
}

fn star(expr: &str, n: usize, k: usize, m: SupportMeta) -> Result<StarDomain, CliError> {
    let h = ContactHamiltonian::from_expression(expr, n, k)?.with_meta(m)?;
    Ok(StarDomain::new(h)?)
}

fn sandwich(p: SandwichArgs, seed: u64) -> Result<Outcome, CliError> {
    let d = star(&p.hamiltonian, p.n, p.k, meta(p.max, p.rho1, p.rho0, p.min_inner))?;
    let meta_audit = d.hamiltonian().audit(p.meta_samples, seed)?;
    let (capacity, certificate) = capacity_interval(&d)?;
    let audit = audit_sandwich(&d, &certificate, p.samples, seed)?;
    let status = if !meta_audit.ok {
        Status::Audit("declared support data contradicted by samples".into())
    } else if !audit.ok {
        Status::Audit(format!(
            "{} inner and {} outer containment violations",
            audit.inner_violations, audit.outer_violations
        ))
    } else {
        Status::Ok
    };
    let res = SandwichResult {
        domain: Domain::Star(d).to_doc()?,
        margins: certificate.margins().to_vec(),
        certificate,
        capacity,
        meta_audit,
        audit,
    };
    outcome(&res, None, status)
}

// ---------------------------------------------------------------- capacity

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, rename_all = "kebab-case")]
pub struct CapacityArgs {
    /// Capacity of the hyperboloid V_k^{a,b}.
    #[arg(long)]
    pub hyperboloid: bool,
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, default_value_t = 1.0)]
    pub a: f64,
    #[arg(long, default_value_t = 1.0)]
    pub b: f64,
    /// Star domain V(H) instead, enclosed by its sandwich.
    #[arg(long, conflicts_with = "hyperboloid")]
    pub hamiltonian: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    pub max: f64,
    #[arg(long, default_value_t = 3.0)]
    pub rho1: f64,
    #[arg(long, default_value_t = 0.1)]
    pub rho0: f64,
    #[arg(long, default_value_t = 0.5)]
    pub min_inner: f64,
}

#[derive(Serialize)]
struct CapacityResult {
    domain: DomainDoc,
    capacity: CapacityInterval,
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate: Option<SandwichCertificate>,
}

fn capacity(p: CapacityArgs) -> Result<Outcome, CliError> {
    let res = match (&p.hamiltonian, p.hyperboloid) {
        (Some(expr), false) => {
            let d = star(expr, p.n, p.k, meta(p.max, p.rho1, p.rho0, p.min_inner))?;
            let (capacity, cert) = capacity_interval(&d)?;
            CapacityResult { domain: Domain::Star(d).to_doc()?, capacity, certificate: Some(cert) }
        }
        (None, true) => {
            let h = Hyperboloid::new(p.n, p.k, p.a, p.b)?;
            CapacityResult {
                domain: Domain::Hyperboloid(h).to_doc()?,
                capacity: capacity_hyperboloid(&h)?,
                certificate: None,
            }
        }
        _ => return Err(CliError::Invalid("give exactly one of --hyperboloid and --hamiltonian".into())),
    };
    outcome(&res, None, Status::Ok)
}

// ---------------------------------------------------------------- squeeze

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, rename_all = "kebab-case")]
pub struct SqueezeArgs {
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, default_value_t = 1.0)]
    pub a: f64,
    #[arg(long, default_value_t = 1.0)]
    pub b: f64,
    /// Scale of the domain to squeeze into V.
    #[arg(long, default_value_t = 1.5)]
    pub s: f64,
    /// Number of random candidate maps.
    #[arg(long, default_value_t = 5)]
    pub candidates: usize,
    /// Points of sV tried per candidate.
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    /// Radius (squared) of the ball where candidates are the identity.
    #[arg(long, default_value_t = 0.05)]
    pub eps: f64,
    /// Amplitude of the random contact Hamiltonians.
    #[arg(long, default_value_t = 0.5)]
    pub amplitude: f64,
    /// Support bound (angle ratio) of the random contact Hamiltonians.
    #[arg(long, default_value_t = 2.0)]
    pub rho_max: f64,
}

#[derive(Serialize)]
struct Candidate {
    id: usize,
    hamiltonian: Option<String>,
    smoothing: SmoothingCertificate,
}

#[derive(Serialize)]
struct SqueezeResult {
    report: NonSqueezingReport,
    candidates: Vec<Candidate>,
}

fn squeeze(p: SqueezeArgs, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let v = Domain::Hyperboloid(Hyperboloid::new(p.n, p.k, p.a, p.b)?);
    let mut psis = Vec::with_capacity(p.candidates);
    let mut cands = Vec::with_capacity(p.candidates);
    for id in 0..p.candidates {
        let mut rng = stream(cfg.seed, 0x5100 + id as u64);
        let iso = random_isotopy(&mut rng, p.n, p.k, p.amplitude, p.rho_max)?.with_step(cfg.tolerances.flow_step)?;
        let psi = smoothed_symplectization(&iso, p.eps, 200, cfg.seed)?;
        cands.push(Candidate {
            id,
            hamiltonian: iso.segments()[0].expression(),
            smoothing: *psi.certificate(),
        });
        psis.push(psi);
    }
    let report = nonsqueezing_verdict(&v, p.s, &psis, p.samples, cfg.seed)?;
    let status = match report.verdict {
        Verdict::Contradiction => Status::Audit("a candidate kept every sample of sV inside V".into()),
        _ => Status::Ok,
    };
    outcome(&SqueezeResult { report, candidates: cands }, None, status)
}

// ---------------------------------------------------------------- metric

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// `{f, s f, s^2 f, ...}` for the given Hamiltonian `f`.
    Scaling,
    /// Random cone elements sharing one bump window.
    Random,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, rename_all = "kebab-case")]
pub struct MetricArgs {
    #[arg(long, value_enum, default_value_t = Family::Scaling)]
    pub family: Family,
    /// Ratio of consecutive members of a scaling family.
    #[arg(long, default_value_t = 2.0)]
    pub s: f64,
    /// Family size (default 3 for scaling, 5 for random).
    #[arg(long)]
    pub count: Option<usize>,
    /// Random flows in the conjugator pool, besides the identity.
    #[arg(long, default_value_t = 4)]
    pub flows: usize,
    /// Sphere grid for pointwise domination.
    #[arg(long, default_value_t = DEFAULT_GRID)]
    pub grid: usize,
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// Base element of a scaling family.
    #[arg(long, default_value = WORKED)]
    pub hamiltonian: String,
    #[arg(long, default_value_t = 1.0)]
    pub max: f64,
    #[arg(long, default_value_t = 3.0)]
    pub rho1: f64,
    #[arg(long, default_value_t = 0.1)]
    pub rho0: f64,
    #[arg(long, default_value_t = 0.5)]
    pub min_inner: f64,
}

#[derive(Serialize)]
struct Triangle {
    triple: (usize, usize, usize),
    /// `d_hi(f, g) + d_hi(g, h) - d_hi(f, h)`.
    #[serde(with = "num17")]
    slack: f64,
    passed: bool,
}

#[derive(Serialize)]
struct DwEntry {
    pair: (usize, usize),
    check: DwCheck,
}

#[derive(Serialize)]
struct MetricResult {
    elements: Vec<Option<String>>,
    capacities: Vec<CapacityInterval>,
    pool: Vec<String>,
    quotient: QuotientReport,
    triangle: Vec<Triangle>,
    dw: Vec<DwEntry>,
}

fn metric(p: MetricArgs, seed: u64) -> Result<Outcome, CliError> {
    let fam = match p.family {
        Family::Scaling => {
            let count = p.count.unwrap_or(3);
            if !(p.s > 0.0 && p.s.is_finite()) {
                return Err(CliError::Invalid(format!("scale {} must be positive", p.s)));
            }
            let base = ContactHamiltonian::from_expression(&p.hamiltonian, p.n, p.k)?
                .with_meta(meta(p.max, p.rho1, p.rho0, p.min_inner))?;
            let scales: Vec<f64> = (0..count).map(|i| p.s.powi(i as i32)).collect();
            let pool = default_pool(p.n, p.k, p.flows, 0.9, seed)?;
            ConeFamily::scaling(&base, &scales, pool, p.grid, seed)?
        }
        Family::Random => ConeFamily::random(p.n, p.k, p.count.unwrap_or(5), p.flows, p.grid, seed)?,
    };
    let m = fam.len();
    let quotient = equivalence_and_order(&fam)?;
    let mut d = vec![vec![0.0; m]; m];
    let mut dw = Vec::new();
    for i in 0..m {
        for j in (i + 1)..m {
            let hi = pseudo_distance(&fam, i, j)?.hi;
            d[i][j] = hi;
            d[j][i] = hi;
            dw.push(DwEntry { pair: (i, j), check: dw_bound_check(&fam, i, j)? });
        }
    }
    let mut triangle = Vec::new();
    for f in 0..m {
        for g in 0..m {
            for h in 0..m {
                if f == g || g == h || f == h {
                    continue;
                }
                let slack = d[f][g] + d[g][h] - d[f][h];
                // NaN when both sides are unbounded.
                let passed = !(slack < -1e-12);
                triangle.push(Triangle { triple: (f, g, h), slack, passed });
            }
        }
    }
    let failed = triangle.iter().filter(|t| !t.passed).count() + dw.iter().filter(|e| !e.check.passed).count();
    let status = if failed > 0 {
        Status::Audit(format!("{failed} metric checks failed"))
    } else if !quotient.antisymmetric {
        Status::Audit("witnessed order is not antisymmetric".into())
    } else {
        Status::Ok
    };
    let res = MetricResult {
        elements: fam.elements.iter().map(|e| e.expression()).collect(),
        capacities: fam.capacities.clone(),
        pool: fam.pool.iter().map(|c| c.id.clone()).collect(),
        quotient,
        triangle,
        dw,
    };
    outcome(&res, None, status)
}

// ---------------------------------------------------------------- smoothing-audit

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, rename_all = "kebab-case")]
pub struct SmoothingArgs {
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// Radius (squared) of the ball where the smoothing is the identity.
    #[arg(long, default_value_t = 0.05)]
    pub eps: f64,
    /// Samples inside the ball and outside `k_phi eps`.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    /// Points where the Jacobian is tested for symplecticity.
    #[arg(long, default_value_t = 100)]
    pub points: usize,
    #[arg(long, default_value_t = 0.25)]
    pub amplitude: f64,
    #[arg(long, default_value_t = 2.0)]
    pub rho_max: f64,
}

#[derive(Serialize)]
struct SmoothingResult {
    hamiltonian: Option<String>,
    audit: SmoothingAudit,
    passed: bool,
}

fn smoothing(p: SmoothingArgs, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let mut rng = stream(cfg.seed, 0x5300);
    let iso = random_isotopy(&mut rng, p.n, p.k, p.amplitude, p.rho_max)?.with_step(cfg.tolerances.flow_step)?;
    let psi = smoothed_symplectization(&iso, p.eps, 300, cfg.seed)?;
    let audit = audit_smoothing(&psi, p.samples, p.points, cfg.tolerances.fd_step, cfg.seed)?;
    let passed = audit.passed(1e-9, 1e-6, 1e-6);
    let status = if passed { Status::Ok } else { Status::Audit("smoothing contract violated".into()) };
    let res = SmoothingResult { hamiltonian: iso.segments()[0].expression(), audit, passed };
    outcome(&res, None, status)
}
