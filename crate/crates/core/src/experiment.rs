//! End-to-end experiment: simulate, reconstruct, evaluate.
//!
//! Every step reads and writes files in the configured output directory, so
//! steps can be run separately and their outputs inspected.
//!
//! | file | written by |
//! |---|---|
//! | `fine_mesh.txt`, `coarse_mesh.txt` | [`cmd_mesh_gen`], [`cmd_simulate`] |
//! | `potentials.csv`, `true_field.csv`, `measurements_clean.csv`, `measurements_NNN.csv` | [`cmd_simulate`] |
//! | `r_long.txt`, `r_trans.txt` | [`cmd_assemble`] |
//! | `reconstruction_NNN.csv`, `report_NNN.txt`, `reconstruction_mean.csv` | [`cmd_reconstruct`] |
//! | `evaluation.csv` | [`cmd_evaluate`] |

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::field::NodalField;
use crate::forward::{
    add_noise, build_projection, gradient_field, longitudinal_data, project, solve_potential,
    DipoleSource,
};
use crate::geometry::{
    build_disk_mesh, enumerate_chords, place_electrodes, Chord, Point2, TriMesh,
};
use crate::inverse::{build_laplacian, build_weights, InverseProblem, SolveOptions, SolveReport};
use crate::io;
use crate::metrics::{evaluate, EvalResult};
use crate::ray::{assemble_pair, RayMatrix};
use crate::{Error, Real, Result};

pub const FINE_MESH: &str = "fine_mesh.txt";
pub const COARSE_MESH: &str = "coarse_mesh.txt";
pub const POTENTIALS: &str = "potentials.csv";
pub const TRUE_FIELD: &str = "true_field.csv";
pub const CLEAN_MEASUREMENTS: &str = "measurements_clean.csv";
pub const R_LONG: &str = "r_long.txt";
pub const R_TRANS: &str = "r_trans.txt";
pub const MEAN_RECONSTRUCTION: &str = "reconstruction_mean.csv";
pub const EVALUATION: &str = "evaluation.csv";
pub const EVALUATION_HEADER: &str = "realization,mr,cs,loc_node,loc_error,max_mag_ratio";

pub fn measurements_file(k: usize) -> String {
    format!("measurements_{k:03}.csv")
}

pub fn reconstruction_file(k: usize) -> String {
    format!("reconstruction_{k:03}.csv")
}

pub fn report_file(k: usize) -> String {
    format!("report_{k:03}.txt")
}

/// Experiment parameters, read from `key = value` lines.
///
/// Optional keys and their defaults: `radius = 1`, `n_electrodes = 32`,
/// `sigma = 1`, `alpha = 0.06`, `beta = 0.016`, `seed = 0`,
/// `realizations = 10`, `output_dir = out`. All other keys are required.
/// `snr_db = inf` disables noise.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig<T> {
    pub radius: T,
    pub fine_h: T,
    pub coarse_h: T,
    pub n_electrodes: usize,
    pub sigma: T,
    pub dipole: Point2<T>,
    pub moment: Point2<T>,
    pub snr_db: f64,
    pub seed: u64,
    pub alpha: T,
    pub beta: T,
    pub realizations: usize,
    pub output_dir: PathBuf,
}

const KEYS: [&str; 15] = [
    "radius",
    "fine_h",
    "coarse_h",
    "n_electrodes",
    "sigma",
    "dipole_x",
    "dipole_y",
    "qx",
    "qy",
    "snr_db",
    "seed",
    "alpha",
    "beta",
    "realizations",
    "output_dir",
];

impl<T: Real> ExperimentConfig<T> {
    pub fn from_reader(path: &Path, reader: impl BufRead) -> Result<Self> {
        let pairs = io::read_key_values(path, reader)?;
        if let Some((line, key, _)) = pairs.iter().find(|(_, k, _)| !KEYS.contains(&k.as_str())) {
            return Err(Error::parse(path, *line, format!("unknown key `{key}`")));
        }
        let get = |key: &str| pairs.iter().find(|(_, k, _)| k == key);
        fn value<V: FromStr>(
            path: &Path,
            found: Option<&(usize, String, String)>,
            key: &str,
            default: Option<V>,
        ) -> Result<V> {
            match (found, default) {
                (Some((line, _, v)), _) => v.parse().map_err(|_| {
                    Error::parse(path, *line, format!("invalid value `{v}` for `{key}`"))
                }),
                (None, Some(d)) => Ok(d),
                (None, None) => Err(Error::Config(format!("missing required key `{key}`"))),
            }
        }
        let num = |key: &str, default: Option<f64>| -> Result<T> {
            value::<T>(path, get(key), key, default.map(T::lit))
        };
        let cfg = ExperimentConfig {
            radius: num("radius", Some(1.0))?,
            fine_h: num("fine_h", None)?,
            coarse_h: num("coarse_h", None)?,
            n_electrodes: value(path, get("n_electrodes"), "n_electrodes", Some(32))?,
            sigma: num("sigma", Some(1.0))?,
            dipole: Point2::new(num("dipole_x", None)?, num("dipole_y", None)?),
            moment: Point2::new(num("qx", None)?, num("qy", None)?),
            snr_db: value(path, get("snr_db"), "snr_db", None)?,
            seed: value(path, get("seed"), "seed", Some(0))?,
            alpha: num("alpha", Some(0.06))?,
            beta: num("beta", Some(0.016))?,
            realizations: value(path, get("realizations"), "realizations", Some(10))?,
            output_dir: value(
                path,
                get("output_dir"),
                "output_dir",
                Some(PathBuf::from("out")),
            )?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_reader(path, io::open(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("radius", self.radius),
            ("fine_h", self.fine_h),
            ("coarse_h", self.coarse_h),
            ("sigma", self.sigma),
        ];
        for (key, v) in positive {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::Config(format!(
                    "`{key}` must be positive and finite, got {v}"
                )));
            }
        }
        if self.fine_h > self.coarse_h {
            return Err(Error::Config("`fine_h` must not exceed `coarse_h`".into()));
        }
        if !(self.alpha >= T::zero()) || !(self.beta >= T::zero()) {
            return Err(Error::Config(
                "`alpha` and `beta` must be non-negative".into(),
            ));
        }
        if self.n_electrodes < 3 {
            return Err(Error::Config("`n_electrodes` must be at least 3".into()));
        }
        if self.realizations == 0 {
            return Err(Error::Config("`realizations` must be at least 1".into()));
        }
        if self.snr_db.is_nan() {
            return Err(Error::Config("`snr_db` must be a number or `inf`".into()));
        }
        Ok(())
    }

    pub fn source(&self) -> Result<DipoleSource<T>> {
        DipoleSource::new(self.dipole, self.moment)
    }

    pub fn fine_mesh(&self) -> Result<TriMesh<T>> {
        build_disk_mesh(self.radius, self.fine_h)?.with_conductivity(self.sigma)
    }

    pub fn coarse_mesh(&self) -> Result<TriMesh<T>> {
        build_disk_mesh(self.radius, self.coarse_h)?.with_conductivity(self.sigma)
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.output_dir.join(name)
    }

    /// Seed of realization `k`.
    pub fn realization_seed(&self, k: usize) -> u64 {
        self.seed.wrapping_add(k as u64)
    }
}

fn chords_for<T: Real>(mesh: &TriMesh<T>, n: usize) -> Result<Vec<Chord<T>>> {
    enumerate_chords(&place_electrodes(mesh, n)?, mesh)
}

/// Loads a mesh written by [`cmd_mesh_gen`] and applies the configured conductivity.
fn load_mesh<T: Real>(cfg: &ExperimentConfig<T>, name: &str) -> Result<TriMesh<T>> {
    io::load_mesh(&cfg.path(name))?.with_conductivity(cfg.sigma)
}

pub fn cmd_mesh_gen<T: Real>(cfg: &ExperimentConfig<T>) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for (name, mesh) in [
        (FINE_MESH, cfg.fine_mesh()?),
        (COARSE_MESH, cfg.coarse_mesh()?),
    ] {
        let path = cfg.path(name);
        io::save_mesh(&path, &mesh)?;
        out.push(path);
    }
    Ok(out)
}

/// Forward solve on the fine mesh, true field on the coarse mesh and one
/// noisy measurement file per realization.
pub fn cmd_simulate<T: Real>(cfg: &ExperimentConfig<T>) -> Result<Vec<PathBuf>> {
    let mut files = cmd_mesh_gen(cfg)?;
    let fine = load_mesh(cfg, FINE_MESH)?;
    let coarse = load_mesh(cfg, COARSE_MESH)?;
    let src = cfg.source()?;
    src.check_clearance(&fine)?;
    let u = solve_potential(&fine, &src)?;
    let truth = project(
        &build_projection(&fine, &coarse)?,
        &fine,
        &gradient_field(&fine, &u)?,
    )?;
    let layout = place_electrodes(&fine, cfg.n_electrodes)?;
    let chords = enumerate_chords(&layout, &fine)?;
    let clean = longitudinal_data(&u, &layout, &chords)?;

    let mut save = |name: String, write: &dyn Fn(&Path) -> Result<()>| -> Result<()> {
        let path = cfg.path(&name);
        write(&path)?;
        files.push(path);
        Ok(())
    };
    save(POTENTIALS.into(), &|p| io::save_potentials(p, &fine, &u.u))?;
    save(TRUE_FIELD.into(), &|p| io::save_field(p, &coarse, &truth))?;
    save(CLEAN_MEASUREMENTS.into(), &|p| {
        io::save_measurements(p, &chords, &clean)
    })?;
    for k in 0..cfg.realizations {
        let (noisy, _) = add_noise(&clean, cfg.snr_db, cfg.realization_seed(k))
            .map_err(|e| realization_error(k, e))?;
        save(measurements_file(k), &|p| {
            io::save_measurements(p, &chords, &noisy)
        })?;
    }
    Ok(files)
}

fn realization_error(k: usize, e: Error) -> Error {
    Error::Realization {
        realization: k,
        source: Box::new(e),
    }
}

/// Ray matrices of the coarse mesh in triplet format.
pub fn cmd_assemble<T: Real>(cfg: &ExperimentConfig<T>) -> Result<Vec<PathBuf>> {
    let coarse = load_mesh(cfg, COARSE_MESH)?;
    let (rl, rt) = assemble_pair(&coarse, &chords_for(&coarse, cfg.n_electrodes)?)?;
    let mut files = Vec::new();
    for (name, r) in [(R_LONG, &rl), (R_TRANS, &rt)] {
        let path = cfg.path(name);
        io::save_triplets(&path, r.csr())?;
        files.push(path);
    }
    Ok(files)
}

/// Checks that a measurement file was taken on `chords` and returns its values.
fn measurement_values<T: Real>(path: &Path, chords: &[Chord<T>]) -> Result<Vec<T>> {
    let rows = io::load_measurements::<T>(path)?;
    if rows.len() != chords.len() {
        return Err(Error::MeshMismatch(format!(
            "{} has {} measurements, the layout has {} chords",
            path.display(),
            rows.len(),
            chords.len()
        )));
    }
    if let Some(r) = rows
        .iter()
        .zip(chords)
        .find(|(r, c)| r.electrodes != c.endpoints)
    {
        return Err(Error::MeshMismatch(format!(
            "{}: chord {} joins electrodes {:?}, expected {:?}",
            path.display(),
            r.0.chord_index,
            r.0.electrodes,
            r.1.endpoints
        )));
    }
    Ok(rows.into_iter().map(|r| r.value).collect())
}

/// Operators of the reconstruction on a given mesh.
pub struct Reconstructor<T> {
    pub r_long: RayMatrix<T>,
    pub r_trans: RayMatrix<T>,
    pub w: crate::linalg::CsrMatrix<T>,
}

impl<T: Real> Reconstructor<T> {
    pub fn new(mesh: &TriMesh<T>, chords: &[Chord<T>]) -> Result<Self> {
        let (r_long, r_trans) = assemble_pair(mesh, chords)?;
        let w = build_weights(&r_long).operator(&build_laplacian(mesh)?)?;
        Ok(Reconstructor { r_long, r_trans, w })
    }

    pub fn problem(
        &self,
        alpha: T,
        beta: T,
        options: SolveOptions<T>,
    ) -> Result<InverseProblem<'_, T>> {
        InverseProblem::new(&self.r_long, &self.r_trans, &self.w, alpha, beta, options)
    }
}

/// Solves `data.len()` problems concurrently, preserving order.
pub fn solve_all<T: Real>(
    problem: &InverseProblem<'_, T>,
    data: &[Vec<T>],
) -> Vec<Result<(NodalField<T>, SolveReport<T>)>> {
    let workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(data.len())
        .max(1);
    let mut results: Vec<Option<Result<_>>> = (0..data.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                scope.spawn(move || {
                    (w..data.len())
                        .step_by(workers)
                        .map(|k| (k, problem.solve(&data[k])))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (k, r) in h.join().expect("solver thread panicked") {
                results[k] = Some(r);
            }
        }
    });
    results
        .into_iter()
        .map(|r| r.expect("every realization solved"))
        .collect()
}

pub fn write_report<T: Real>(out: &mut impl Write, r: &SolveReport<T>) -> std::io::Result<()> {
    writeln!(out, "objective = {}", r.objective)?;
    writeln!(out, "fidelity = {}", r.fidelity)?;
    writeln!(out, "l1_transverse = {}", r.l1_transverse)?;
    writeln!(out, "l1_laplace = {}", r.l1_laplace)?;
    writeln!(out, "iters = {}", r.iterations)?;
    writeln!(out, "residuals = {} {}", r.primal_residual, r.dual_residual)?;
    writeln!(out, "seconds = {}", r.seconds)
}

/// Per-realization reconstructions, reports and their nodewise mean.
pub fn cmd_reconstruct<T: Real>(cfg: &ExperimentConfig<T>) -> Result<Vec<SolveReport<T>>> {
    cmd_reconstruct_with(cfg, SolveOptions::default())
}

pub fn cmd_reconstruct_with<T: Real>(
    cfg: &ExperimentConfig<T>,
    options: SolveOptions<T>,
) -> Result<Vec<SolveReport<T>>> {
    let coarse = load_mesh(cfg, COARSE_MESH)?;
    let chords = chords_for(&coarse, cfg.n_electrodes)?;
    let data = (0..cfg.realizations)
        .map(|k| measurement_values(&cfg.path(&measurements_file(k)), &chords))
        .collect::<Result<Vec<_>>>()?;
    let ops = Reconstructor::new(&coarse, &chords)?;
    let problem = ops.problem(cfg.alpha, cfg.beta, options)?;
    let mut fields = Vec::new();
    let mut reports = Vec::new();
    for (k, res) in solve_all(&problem, &data).into_iter().enumerate() {
        let (field, report) = res.map_err(|e| realization_error(k, e))?;
        io::save_field(&cfg.path(&reconstruction_file(k)), &coarse, &field)?;
        let path = cfg.path(&report_file(k));
        let mut w = io::create(&path)?;
        write_report(&mut w, &report)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(&path, e))?;
        fields.push(field);
        reports.push(report);
    }
    io::save_field(
        &cfg.path(MEAN_RECONSTRUCTION),
        &coarse,
        &NodalField::mean(&fields)?,
    )?;
    Ok(reports)
}

fn load_coarse_field<T: Real>(mesh: &TriMesh<T>, path: &Path) -> Result<NodalField<T>> {
    let (pts, f) = io::load_field(path)?;
    io::check_positions(mesh, &pts, &path.display().to_string())?;
    Ok(f)
}

/// Metrics of every realization followed by those of the mean field.
pub fn cmd_evaluate<T: Real>(cfg: &ExperimentConfig<T>) -> Result<Vec<EvalResult<T>>> {
    let coarse = load_mesh(cfg, COARSE_MESH)?;
    let src = cfg.source()?;
    let truth = load_coarse_field(&coarse, &cfg.path(TRUE_FIELD))?;
    let mut names: Vec<String> = (0..cfg.realizations).map(reconstruction_file).collect();
    names.push(MEAN_RECONSTRUCTION.into());
    let results = names
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let f = load_coarse_field(&coarse, &cfg.path(name))?;
            evaluate(&f, &truth, &coarse, &src).map_err(|e| realization_error(k, e))
        })
        .collect::<Result<Vec<_>>>()?;
    let path = cfg.path(EVALUATION);
    let mut w = io::create(&path)?;
    write_evaluation(&mut w, &results).map_err(|e| Error::io(&path, e))?;
    Ok(results)
}

/// One row per realization; the last result is labelled `mean`.
pub fn write_evaluation<T: Real>(
    out: &mut impl Write,
    results: &[EvalResult<T>],
) -> std::io::Result<()> {
    writeln!(out, "{EVALUATION_HEADER}")?;
    for (k, r) in results.iter().enumerate() {
        let label = if k + 1 == results.len() {
            "mean".to_string()
        } else {
            k.to_string()
        };
        writeln!(
            out,
            "{label},{},{},{},{},{}",
            r.mr, r.cs, r.loc_node, r.loc_error, r.max_mag_ratio
        )?;
    }
    out.flush()
}

/// Renders a field CSV as an SVG figure.
pub fn cmd_plot<T: Real>(
    field_csv: &Path,
    out_svg: &Path,
    style: crate::plot::PlotStyle,
) -> Result<()> {
    let (pts, field) = io::load_field::<T>(field_csv)?;
    let svg = crate::plot::render_svg(&pts, &field, style)?;
    let mut w = io::create(out_svg)?;
    w.write_all(svg.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(out_svg, e))
}
