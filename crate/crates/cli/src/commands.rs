//! Implementation of the CLI subcommands.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde_json::{json, Value};

use runchain::families::grid;
use runchain::families::level::{self, LevelParams, Tail};
use runchain::families::semigroup::{GridSemigroup, SpatialChain};
use runchain::gen::{FreeWordGenerator, GridGenerator, TreeGenerator};
use runchain::invariant::{Classification, Verdict};
use runchain::io::{self, TreeFile};
use runchain::poset::{Budget, Poset};
use runchain::reversal::{reverse_downward, reverse_upward, ReversalMode};
use runchain::simulate::{
    estimate_invariant, simulate_excursions, KernelRef, SimulationConfig, TrajectoryConfig,
};
use runchain::{DownwardKernel, UpwardKernel};

use crate::output::{emit, RunManifest};
use crate::{
    AnalyzeArgs, Command, Direction, GridDemoArgs, LevelsDemoArgs, PathsArgs, PosetSource,
    ReverseArgs, SimulateArgs, ValidateArgs,
};

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Undetermined,
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Undetermined => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(msg) => write!(f, "{msg}"),
            CliError::Undetermined => {
                write!(f, "classification is undetermined at this depth (--strict)")
            }
            CliError::Io(msg) => write!(f, "{msg}"),
        }
    }
}

fn invalid(err: impl std::fmt::Display) -> CliError {
    CliError::Validation(err.to_string())
}

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Validate(args) => validate(args),
        Command::Invariant(args) => analyze(args, AnalyzeKind::Invariant),
        Command::Classify(args) => analyze(args, AnalyzeKind::Classify),
        Command::Reverse(args) => reverse(args),
        Command::Simulate(args) => simulate(args),
        Command::GridDemo(args) => grid_demo(args),
        Command::LevelsDemo(args) => levels_demo(args),
        Command::Paths(args) => paths(args),
    }
}

// ---------------------------------------------------------------- loading

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))
}

fn load_source(source: &PosetSource) -> Result<Arc<Poset>, CliError> {
    let budget = Budget {
        max_depth: source.depth,
        max_elements: 1_000_000,
    };
    let poset = match (&source.poset, &source.generator) {
        (Some(path), None) => {
            let text = read_file(path)?;
            let file: io::PosetFile = serde_json::from_str(&text)
                .map_err(|e| invalid(format!("{}: {e}", path.display())))?;
            file.validate().map_err(invalid)?
        }
        (None, Some(spec)) => match spec.split_once(':') {
            Some(("grid", k)) => {
                let k: usize = k
                    .parse()
                    .map_err(|_| invalid(format!("bad grid dimension `{k}`")))?;
                Poset::from_generator(&GridGenerator { k }, budget).map_err(invalid)?
            }
            Some(("free", letters)) if !letters.is_empty() => Poset::from_generator(
                &FreeWordGenerator {
                    alphabet: letters.chars().collect(),
                },
                budget,
            )
            .map_err(invalid)?,
            Some(("tree", path)) => {
                let text = read_file(Path::new(path))?;
                let file: TreeFile =
                    serde_json::from_str(&text).map_err(|e| invalid(format!("{path}: {e}")))?;
                Poset::from_generator(
                    &TreeGenerator {
                        root: file.root,
                        children: file.children,
                    },
                    budget,
                )
                .map_err(invalid)?
            }
            _ => {
                return Err(invalid(format!(
                    "unknown generator `{spec}` (expected grid:<k>, free:<letters> or tree:<file>)"
                )))
            }
        },
        _ => return Err(invalid("exactly one of --poset or --gen is required")),
    };
    Ok(Arc::new(poset))
}

/// A kernel file, either bare or a full kernel report.
struct KernelDocument {
    rows: io::KernelRows,
    root_tail: Option<f64>,
    /// Invariant function shipped alongside the kernel, by label.
    invariant: Option<BTreeMap<String, f64>>,
}

/// Kernel files are either a bare rows map or a document embedding one
/// under "kernel" (as the reverse command writes), possibly with its own
/// "root_tail" and "invariant".
fn load_rows(path: &Path) -> Result<KernelDocument, CliError> {
    let text = read_file(path)?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    let (rows_value, root_tail, invariant) = match value.get("kernel") {
        Some(inner) => (
            inner.clone(),
            value.get("root_tail").and_then(Value::as_f64),
            value
                .get("invariant")
                .map(|v| {
                    serde_json::from_value(v.clone())
                        .map_err(|e| invalid(format!("{}: invariant: {e}", path.display())))
                })
                .transpose()?,
        ),
        None => (value, None, None),
    };
    let rows: io::KernelRows = serde_json::from_value(rows_value)
        .map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    Ok(KernelDocument {
        rows,
        root_tail,
        invariant,
    })
}

fn invariant_from_map(
    map: &BTreeMap<String, f64>,
    poset: &Poset,
) -> Result<runchain::InvariantFunction, CliError> {
    let mut values = vec![0.0; poset.len()];
    for x in poset.elements() {
        values[x.index()] = *map
            .get(poset.label(x))
            .ok_or_else(|| invalid(format!("invariant misses element `{}`", poset.label(x))))?;
    }
    Ok(runchain::InvariantFunction::exact(
        values,
        poset.depth_used(),
    ))
}

fn load_up(path: &Path, poset: &Arc<Poset>, strict: bool) -> Result<UpwardKernel, CliError> {
    let doc = load_rows(path)?;
    UpwardKernel::from_rows(Arc::clone(poset), &doc.rows, strict).map_err(invalid)
}

fn load_down(
    path: &Path,
    poset: &Arc<Poset>,
    root_tail: f64,
    strict: bool,
) -> Result<DownwardKernel, CliError> {
    let doc = load_rows(path)?;
    let tail = doc.root_tail.unwrap_or(root_tail);
    DownwardKernel::from_rows(Arc::clone(poset), &doc.rows, tail, strict).map_err(invalid)
}

fn source_manifest(manifest: RunManifest, source: &PosetSource) -> RunManifest {
    manifest
        .input_opt("poset", source.poset.as_deref())
        .input_opt("gen", source.generator.as_deref().map(Path::new))
        .param("depth", source.depth)
}

// ------------------------------------------------------------- validate

fn validate(args: ValidateArgs) -> Result<(), CliError> {
    let poset = load_source(&args.source)?;
    let uniformity = poset.check_uniform();
    let mut payload = json!({
        "poset": {
            "elements": poset.len(),
            "root": poset.label(poset.root()),
            "complete": poset.is_complete(),
            "depth_used": poset.depth_used(),
            "uniform": uniformity.is_ok(),
        },
        "ok": true,
    });
    if let Err(witness) = &uniformity {
        payload["poset"]["nonuniform_witness"] = json!({
            "element": poset.label(witness.element),
            "lengths": witness.lengths,
        });
    }
    if let Some(kernel_path) = &args.kernel {
        let direction = args
            .direction
            .ok_or_else(|| invalid("--direction is required with --kernel"))?;
        match direction {
            Direction::Up => {
                let kernel = load_up(kernel_path, &poset, args.strict)?;
                payload["kernel"] = json!({
                    "direction": "up",
                    "strict": kernel.is_strict(),
                    "degenerate": kernel.is_degenerate(),
                });
            }
            Direction::Down => {
                let kernel = load_down(kernel_path, &poset, args.root_tail, args.strict)?;
                payload["kernel"] = json!({
                    "direction": "down",
                    "strict": kernel.is_strict(),
                    "root_tail": kernel.root_tail(),
                });
            }
        }
    }
    let manifest = source_manifest(RunManifest::new("validate"), &args.source)
        .input_opt("kernel", args.kernel.as_deref())
        .param("strict", args.strict);
    emit(manifest, payload, args.out.as_deref())
}

// ------------------------------------------------- invariant / classify

enum AnalyzeKind {
    Invariant,
    Classify,
}

fn classification_json(c: &Classification, mean_key: &str) -> Value {
    json!({
        mean_key: c.mu_e,
        "verdict": c.verdict,
        "partial_sum": c.partial_sum,
        "tail_bound": c.tail_bound,
        "survival": c.survival,
        "depth": c.depth,
    })
}

fn analyze(args: AnalyzeArgs, kind: AnalyzeKind) -> Result<(), CliError> {
    let poset = load_source(&args.source)?;
    let command = match kind {
        AnalyzeKind::Invariant => "invariant",
        AnalyzeKind::Classify => "classify",
    };
    let manifest = source_manifest(RunManifest::new(command), &args.source)
        .input("kernel", args.kernel.display())
        .param("direction", args.direction.as_str())
        .param("tol", args.tol)
        .param("strict", args.strict);

    let (c, values, key, mean_key) = match args.direction {
        Direction::Up => {
            let kernel = load_up(&args.kernel, &poset, args.strict)?;
            let f = kernel.invariant_function();
            (kernel.classify(args.tol), f, "F", "mu_e")
        }
        Direction::Down => {
            let kernel = load_down(&args.kernel, &poset, args.root_tail, args.strict)?;
            let g = kernel.invariant_function();
            (kernel.classify(args.tol), g, "G", "nu_e")
        }
    };

    let mut payload = classification_json(&c, mean_key);
    if matches!(kind, AnalyzeKind::Invariant) {
        payload[key] = json!(io::values_by_label(&poset, &values.values));
    }
    let table = match &args.csv {
        Some(_) => {
            let pdf = c.invariant_pdf.as_ref().ok_or_else(|| {
                invalid("--csv needs a positive-recurrent classification (no invariant density)")
            })?;
            let upf = runchain::dist::upf_from_pdf(pdf, &poset, 1.0).map_err(invalid)?;
            let rate = runchain::dist::rate_function(pdf, &poset).map_err(invalid)?;
            Some(io::density_table_csv(&poset, pdf, &upf, &rate).map_err(invalid)?)
        }
        None => None,
    };
    emit(manifest, payload, args.out.as_deref())?;
    if let (Some(path), Some(table)) = (&args.csv, table) {
        let resolved = crate::output::resolve_out(path);
        std::fs::write(&resolved, table)
            .map_err(|e| CliError::Io(format!("writing {}: {e}", resolved.display())))?;
        println!("wrote {}", resolved.display());
    }
    if args.strict && c.verdict == Verdict::Undetermined {
        return Err(CliError::Undetermined);
    }
    Ok(())
}

// -------------------------------------------------------------- reverse

fn reverse(args: ReverseArgs) -> Result<(), CliError> {
    let poset = load_source(&args.source)?;
    let manifest = source_manifest(RunManifest::new("reverse"), &args.source)
        .input("kernel", args.kernel.display())
        .param("direction", args.direction.as_str())
        .param("force", args.force)
        .param("strict", args.strict);
    let doc = load_rows(&args.kernel)?;
    let supplied = doc
        .invariant
        .as_ref()
        .map(|map| invariant_from_map(map, &poset))
        .transpose()?;
    let payload = match args.direction {
        Direction::Up => {
            let kernel = UpwardKernel::from_rows(Arc::clone(&poset), &doc.rows, args.strict)
                .map_err(invalid)?;
            let f = supplied.unwrap_or_else(|| kernel.invariant_function());
            let mode = if args.force {
                ReversalMode::Force
            } else {
                ReversalMode::RequireRecurrent
            };
            let (reversed, report) = reverse_upward(&kernel, &f, mode).map_err(invalid)?;
            json!({
                "direction_out": "down",
                "kernel": reversed.rows_map(),
                "root_tail": reversed.root_tail(),
                "invariant": io::values_by_label(&poset, &f.values),
                "max_row_defect": report.max_row_defect,
                "root_row_sum": report.root_row_sum,
                "depth": report.depth,
            })
        }
        Direction::Down => {
            let tail = doc.root_tail.unwrap_or(args.root_tail);
            let kernel =
                DownwardKernel::from_rows(Arc::clone(&poset), &doc.rows, tail, args.strict)
                    .map_err(invalid)?;
            let g = supplied.unwrap_or_else(|| kernel.invariant_function());
            let (reversed, report) = reverse_downward(&kernel, &g).map_err(invalid)?;
            json!({
                "direction_out": "up",
                "kernel": reversed.rows_map(),
                "invariant": io::values_by_label(&poset, &g.values),
                "max_row_defect": report.max_row_defect,
                "root_row_sum": report.root_row_sum,
                "depth": report.depth,
            })
        }
    };
    emit(manifest, payload, args.out.as_deref())
}

// ------------------------------------------------------------- simulate

fn simulate(args: SimulateArgs) -> Result<(), CliError> {
    let poset = load_source(&args.source)?;
    let up_kernel;
    let down_kernel;
    let kernel_ref = match args.direction {
        Direction::Up => {
            up_kernel = load_up(&args.kernel, &poset, args.strict)?;
            KernelRef::Up(&up_kernel)
        }
        Direction::Down => {
            down_kernel = load_down(&args.kernel, &poset, args.root_tail, args.strict)?;
            KernelRef::Down(&down_kernel)
        }
    };
    let config = SimulationConfig {
        seed: args.seed,
        excursions: args.excursions,
        max_steps: args.max_steps,
    };
    let stats = simulate_excursions(kernel_ref, &config);
    let n = stats.excursions as f64;
    let mut estimates = BTreeMap::new();
    let mut half_widths = BTreeMap::new();
    for x in poset.elements() {
        let p = stats.hit_fraction(x);
        estimates.insert(poset.label(x).to_owned(), p);
        half_widths.insert(poset.label(x).to_owned(), 4.0 * (p * (1.0 - p) / n).sqrt());
    }
    let mut payload = json!({
        "estimates": estimates,
        "half_widths": half_widths,
        "mean_return_time": stats.mean_return_time(),
        "mean_return_stderr": stats.return_time_stderr(),
        "excursions": stats.excursions,
        "completed": stats.completed,
        "truncated_count": stats.truncated,
        "out_of_region": stats.out_of_region,
        "seed": stats.seed,
        "generator_id": stats.generator,
        "renormalization": stats.renormalization,
    });
    if args.steps > 0 {
        let (pdf, trajectory) = estimate_invariant(
            kernel_ref,
            &TrajectoryConfig {
                seed: args.seed,
                steps: args.steps,
                burn_in: args.burn_in.min(args.steps / 2),
            },
        );
        payload["occupancy"] = json!({
            "frequencies": io::values_by_label(&poset, &pdf.weights),
            "counted_steps": trajectory.counted_steps,
            "forced_resets": trajectory.forced_resets,
        });
    }
    let manifest = source_manifest(RunManifest::new("simulate"), &args.source)
        .input("kernel", args.kernel.display())
        .param("direction", args.direction.as_str())
        .param("excursions", args.excursions)
        .param("max_steps", args.max_steps)
        .param("steps", args.steps)
        .seed(args.seed);
    let table = args
        .csv
        .as_ref()
        .map(|_| io::simulation_table_csv(&poset, &stats).map_err(invalid))
        .transpose()?;
    emit(manifest, payload, args.out.as_deref())?;
    if let (Some(path), Some(table)) = (&args.csv, table) {
        let resolved = crate::output::resolve_out(path);
        std::fs::write(&resolved, table)
            .map_err(|e| CliError::Io(format!("writing {}: {e}", resolved.display())))?;
        println!("wrote {}", resolved.display());
    }
    Ok(())
}

// ------------------------------------------------------------ grid-demo

fn parse_floats(text: &str) -> Result<Vec<f64>, CliError> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|part| {
            part.trim()
                .parse::<f64>()
                .map_err(|_| invalid(format!("bad number `{part}`")))
        })
        .collect()
}

fn grid_demo(args: GridDemoArgs) -> Result<(), CliError> {
    let rates = parse_floats(&args.rates)?;
    if rates.len() != args.k {
        return Err(invalid(format!(
            "expected {} rates, got {}",
            args.k,
            rates.len()
        )));
    }
    let point = grid::parse_point(&args.point).map_err(invalid)?;
    if point.len() != args.k {
        return Err(invalid(format!(
            "expected {} coordinates, got {}",
            args.k,
            point.len()
        )));
    }
    let forms = grid::grid_closed_forms(&rates, &point).map_err(invalid)?;

    let mut marginals = Vec::new();
    let mut discrepancy_flags = Vec::new();
    for i in 0..args.k {
        let report = grid::grid_marginal(&rates, i).map_err(invalid)?;
        marginals.push(json!({
            "coordinate": i + 1,
            "parameter": report.oracle,
            "alternative_formula": report.printed,
            "mismatch": report.mismatch,
        }));
        if report.mismatch {
            discrepancy_flags.push(format!(
                "marginal {}: the alternative expression 1 - r_i/sum(r_j, j!=i) disagrees \
                 with the parameter derived from the invariant density",
                i + 1
            ));
        }
    }

    let level: u64 = point.iter().sum();
    let mut downward = BTreeMap::new();
    if level > 0 {
        for i in 0..args.k {
            if point[i] > 0 {
                downward.insert(
                    (i + 1).to_string(),
                    grid::grid_downward(&point, i).map_err(invalid)?,
                );
            }
        }
    }

    // Cross-check one descent probability against explicit time reversal,
    // when the point is inside the enumerated region.
    let mut reversal_check = Value::Null;
    if level > 0 && level <= args.depth as u64 {
        let chain =
            SpatialChain::new(GridSemigroup { k: args.k }, rates.clone()).map_err(invalid)?;
        let (kernel, poset) = chain.kernel(Budget::depth(args.depth)).map_err(invalid)?;
        let f = kernel.invariant_function();
        let (reversed, _) =
            reverse_upward(&kernel, &f, ReversalMode::RequireRecurrent).map_err(invalid)?;
        let i = (0..args.k).find(|&i| point[i] > 0).expect("level > 0");
        let mut below = point.clone();
        below[i] -= 1;
        let from = poset.id(&args.point).map_err(invalid)?;
        let to = poset
            .id(&below
                .iter()
                .map(u64::to_string)
                .collect::<Vec<_>>()
                .join(","))
            .map_err(invalid)?;
        let by_reversal = reversed.prob(from, to);
        let closed = grid::grid_downward(&point, i).map_err(invalid)?;
        reversal_check = json!({
            "coordinate": i + 1,
            "closed_form": closed,
            "by_reversal": by_reversal,
            "difference": (closed - by_reversal).abs(),
        });
    }

    let count_json = u64::try_from(forms.count)
        .map(Value::from)
        .unwrap_or_else(|_| Value::from(forms.count.to_string()));
    let payload = json!({
        "C": count_json,
        "F": forms.upf,
        "f": forms.pdf,
        "verdict": Verdict::PositiveRecurrent,
        "marginals": marginals,
        "discrepancy_flags": discrepancy_flags,
        "downward": downward,
        "reversal_check": reversal_check,
    });
    let manifest = RunManifest::new("grid-demo")
        .param("k", args.k)
        .param("rates", &args.rates)
        .param("point", &args.point)
        .param("depth", args.depth);
    emit(manifest, payload, args.out.as_deref())
}

// ---------------------------------------------------------- levels-demo

fn parse_tail(spec: &str) -> Result<Tail, CliError> {
    match spec.split_once(':') {
        None if spec == "undetermined" => Ok(Tail::Undetermined),
        Some(("constant", c)) => {
            Ok(Tail::Constant(c.parse().map_err(|_| {
                invalid(format!("bad constant tail `{c}`"))
            })?))
        }
        Some(("power", params)) => {
            let values = parse_floats(params)?;
            if values.len() != 2 {
                return Err(invalid("power tail takes two parameters: power:<c>,<p>"));
            }
            Ok(Tail::Power {
                c: values[0],
                p: values[1],
            })
        }
        _ => Err(invalid(format!(
            "unknown tail `{spec}` (expected constant:<c>, power:<c>,<p> or undetermined)"
        ))),
    }
}

fn levels_demo(args: LevelsDemoArgs) -> Result<(), CliError> {
    let prefix = parse_floats(&args.alpha)?;
    let tail = parse_tail(&args.tail)?;
    let params = LevelParams::new(prefix, tail).map_err(invalid)?;
    let runs = level::success_runs(&params, args.depth as usize).map_err(invalid)?;
    let payload = json!({
        "f_hat": runs.f_hat,
        "verdict": runs.classification.verdict,
        "mu0": runs.mu0,
        "partial_sum": runs.classification.partial_sum,
        "tail_bound": runs.classification.tail_bound,
        "depth": runs.classification.depth,
    });
    let manifest = RunManifest::new("levels-demo")
        .param("alpha", &args.alpha)
        .param("tail", &args.tail)
        .param("depth", args.depth);
    emit(manifest, payload, args.out.as_deref())?;
    if args.strict && runs.classification.verdict == Verdict::Undetermined {
        return Err(CliError::Undetermined);
    }
    Ok(())
}

// ----------------------------------------------------------------- paths

fn paths(args: PathsArgs) -> Result<(), CliError> {
    let poset = load_source(&args.source)?;
    let space = poset.path_space(args.max_len, 1_000_000).map_err(invalid)?;
    let (nodes, edges) = space.poset.export();
    let endpoints: BTreeMap<String, String> = space
        .poset
        .elements()
        .map(|a| {
            (
                space.poset.label(a).to_owned(),
                poset.label(space.endpoints[a.index()]).to_owned(),
            )
        })
        .collect();
    let mut counts_by_length = vec![0u64; args.max_len as usize + 1];
    for path in &space.paths {
        counts_by_length[path.len()] += 1;
    }
    let mut payload = json!({
        "nodes": nodes,
        "edges": edges,
        "endpoints": endpoints,
        "counts_by_length": counts_by_length,
    });
    if let Some(label) = &args.element {
        let x = poset.id(label).map_err(invalid)?;
        let fiber: Vec<String> = space
            .fiber(x)
            .iter()
            .map(|&a| space.poset.label(a).to_owned())
            .collect();
        payload["fiber"] = json!(fiber);
    }
    let manifest = source_manifest(RunManifest::new("paths"), &args.source)
        .param("max_len", args.max_len)
        .input_opt("element", args.element.as_deref().map(Path::new));
    emit(manifest, payload, args.out.as_deref())
}
