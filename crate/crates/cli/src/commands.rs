use std::f64::consts::TAU;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use bifurc::export::{self, RecordRow};
use bifurc::intersect::default_grid;
use bifurc::render::{self, ToneMap, ToneMode};
use bifurc::{
    envelope_polyline, find_intersections, symmetry_report, verify_periodicity, DiagramSpec,
    InitPolicy, MapFamily,
};
use rayon::prelude::*;

use crate::config::{pairs_of, parse_branches, parse_orders, parse_pairs};
use crate::{
    DiagramArgs, EnvelopeArgs, Failure, Init, IntersectArgs, Shared, Tone, ToneArgs, VerifyArgs,
};

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn family(name: Option<&str>) -> Result<MapFamily, Failure> {
    let name = name.unwrap_or("sine");
    MapFamily::by_name(name).ok_or_else(|| {
        usage(format!(
            "unknown map `{name}`, expected sine, logistic or rational-odd"
        ))
    })
}

/// Parameter and state windows used when none are given.
fn default_windows(fam: &MapFamily) -> ((f64, f64), (f64, f64)) {
    match fam.name() {
        "logistic" => ((2.5, 4.0), (0.0, 1.0)),
        _ => ((-TAU, TAU), (-TAU, TAU)),
    }
}

fn windows(s: &Shared, fam: &MapFamily) -> ((f64, f64), (f64, f64)) {
    let ((r0, r1), (x0, x1)) = default_windows(fam);
    (
        (s.rmin.unwrap_or(r0), s.rmax.unwrap_or(r1)),
        (s.xmin.unwrap_or(x0), s.xmax.unwrap_or(x1)),
    )
}

fn r_window_checked(r: (f64, f64)) -> Result<(f64, f64), Failure> {
    if r.0.is_finite() && r.1.is_finite() && r.0 < r.1 {
        Ok(r)
    } else {
        Err(usage(format!("need rmin < rmax, got [{}, {}]", r.0, r.1)))
    }
}

fn orders(s: &Shared) -> Result<Vec<usize>, Failure> {
    let list = parse_orders(&s.orders).map_err(Failure::Usage)?;
    let top = *list.last().unwrap();
    if top > s.max_order {
        return Err(usage(format!(
            "order {top} exceeds --max-order {}; curves that deep are noise in chaotic ranges",
            s.max_order
        )));
    }
    Ok(list)
}

fn tone_map(t: &ToneArgs) -> ToneMap {
    ToneMap {
        mode: match t.tone {
            Tone::Log => ToneMode::Log1p,
            Tone::Linear => ToneMode::Linear,
        },
        gamma: t.gamma,
        invert: t.invert,
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

/// Library errors from reading or writing `path`, with the path in the message.
fn at(path: &Path) -> impl Fn(bifurc::Error) -> Failure + '_ {
    move |e| match e {
        bifurc::Error::Io(io) => io_failure(path, io),
        e => Failure::from(e),
    }
}

/// Opens `path`, or stdout when none is given.
fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| io_failure(p, e))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

pub fn diagram(a: &DiagramArgs) -> Result<(), Failure> {
    let s = &a.shared;
    if s.out.is_none() && a.counts.is_none() && a.csv.is_none() {
        return Err(usage("nothing to write; give --out, --counts or --csv"));
    }
    let fam = family(s.map.as_deref())?;
    let (r, x) = windows(s, &fam);
    let mut spec = DiagramSpec::new(fam, r, s.cols, x, s.rows).with_iterations(s.transient, s.keep);
    if let Some(list) = &a.y0 {
        let seeds = list
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| usage(format!("bad --y0 value `{t}`")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        spec = spec.with_init_policy(InitPolicy::Explicit(seeds));
    } else if let Some(init) = a.init {
        spec = spec.with_init_policy(match init {
            Init::Pair => InitPolicy::CriticalValuePair,
            Init::Single => InitPolicy::CriticalValue,
            Init::Random => InitPolicy::Random {
                count: a.init_count,
                seed: a.seed,
            },
        });
    }
    spec.validate()?;
    let tone = tone_map(&a.tone);
    if !(tone.gamma > 0.0) {
        return Err(usage("--gamma must be positive"));
    }

    let raster = bifurc::build_diagram(&spec)?;
    if let Some(p) = &s.out {
        render::write_image(&raster, &tone, &[], p).map_err(at(p))?;
    }
    if let Some(p) = &a.counts {
        export::write_counts(&raster, p).map_err(at(p))?;
    }
    if let Some(p) = &a.csv {
        let mut comment = format!(
            "map={} rmin={} rmax={} xmin={} xmax={} cols={} rows={} transient={} keep={}",
            spec.family.name(),
            spec.r_min,
            spec.r_max,
            spec.x_min,
            spec.x_max,
            spec.columns,
            spec.rows,
            spec.transient,
            spec.keep
        );
        if let InitPolicy::Random { count, seed } = spec.init_policy {
            comment.push_str(&format!(" init=random init_count={count} seed={seed}"));
        }
        export::write_counts_csv(&raster, p, Some(&comment)).map_err(at(p))?;
    }

    eprintln!(
        "diagram {}: {}x{}, {} samples binned, {} escaped columns",
        spec.family.name(),
        spec.columns,
        spec.rows,
        raster.total(),
        raster.escaped_columns.len()
    );
    if let Ok((dx, dr)) = symmetry_report(&raster) {
        eprintln!("flip mismatch: x {dx}, r {dr}");
    }
    Ok(())
}

pub fn envelope(a: &EnvelopeArgs) -> Result<(), Failure> {
    let s = &a.shared;
    if s.out.is_some() && a.counts.is_none() {
        return Err(usage("--out draws over a counts file; give --counts"));
    }
    if a.csv_dir.is_none() && s.out.is_none() {
        return Err(usage(
            "nothing to write; give --csv-dir or --counts with --out",
        ));
    }
    let fam = family(s.map.as_deref())?;
    let orders = orders(s)?;
    let branches = parse_branches(&s.branch).map_err(Failure::Usage)?;
    let raster = match &a.counts {
        Some(p) => Some(export::read_counts(p).map_err(at(p))?.into_raster(fam)),
        None => None,
    };
    let r = match &raster {
        // curves span the raster unless a window is given explicitly
        Some(ras) => (
            s.rmin.unwrap_or(ras.spec.r_min),
            s.rmax.unwrap_or(ras.spec.r_max),
        ),
        None => windows(s, &fam).0,
    };
    let (lo, hi) = r_window_checked(r)?;

    let jobs: Vec<_> = orders
        .iter()
        .flat_map(|&n| branches.iter().map(move |&b| (n, b)))
        .collect();
    let curves = jobs
        .par_iter()
        .map(|&(n, b)| envelope_polyline(&fam, n, b, lo, hi, a.points))
        .collect::<Result<Vec<_>, _>>()?;

    if let Some(dir) = &a.csv_dir {
        fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
        for c in &curves {
            let path = dir.join(format!("c{}_{}.csv", c.order, c.branch));
            export::write_curve_csv(c, &path).map_err(at(&path))?;
        }
    }
    if let (Some(ras), Some(out)) = (&raster, &s.out) {
        let tone = tone_map(&a.tone);
        render::write_image(ras, &tone, &curves, out).map_err(at(out))?;
    }
    eprintln!(
        "envelope {}: {} curves over [{lo}, {hi}], {} points each",
        fam.name(),
        curves.len(),
        a.points
    );
    Ok(())
}

pub fn intersect(a: &IntersectArgs) -> Result<(), Failure> {
    let s = &a.shared;
    let fam = family(s.map.as_deref())?;
    let orders = orders(s)?;
    if orders.len() < 2 {
        return Err(usage("intersections need at least two orders"));
    }
    let pairs = match &a.pairs {
        Some(p) => parse_pairs(p),
        None => parse_branches(&s.branch).map(|b| pairs_of(&b)),
    }
    .map_err(Failure::Usage)?;
    let (lo, hi) = r_window_checked(windows(s, &fam).0)?;
    let grid = match a.grid_density {
        Some(d) if d > 0.0 && d.is_finite() => ((hi - lo) * d).ceil().max(2.0) as usize,
        Some(d) => return Err(usage(format!("--grid-density must be positive, got {d}"))),
        None => default_grid(lo, hi),
    };
    if !(s.tol > 0.0) {
        return Err(usage("--tol must be positive"));
    }

    let mut jobs = Vec::new();
    for (i, &n) in orders.iter().enumerate() {
        for &m in &orders[i + 1..] {
            for &br in &pairs {
                jobs.push((n, m, br));
            }
        }
    }
    let found = jobs
        .par_iter()
        .map(|&(n, m, br)| find_intersections(&fam, n, m, br, lo, hi, grid, s.tol))
        .collect::<Result<Vec<_>, _>>()?;
    let rows: Vec<RecordRow> = found.iter().flatten().map(RecordRow::from).collect();

    let header = [
        ("map", fam.name().to_string()),
        ("rmin", lo.to_string()),
        ("rmax", hi.to_string()),
        ("orders", s.orders.clone()),
        ("grid", grid.to_string()),
        ("tol", format!("{:e}", s.tol)),
    ];
    let out = output(s.out.as_deref())?;
    export::write_records(out, &header, &rows)?;
    let tangential = rows.iter().filter(|r| r.tangential).count();
    eprintln!(
        "intersect {}: {} records ({tangential} tangential) from {} curve pairs",
        fam.name(),
        rows.len(),
        jobs.len()
    );
    Ok(())
}

pub fn verify(a: &VerifyArgs) -> Result<(), Failure> {
    let s = &a.shared;
    let file = File::open(&a.input).map_err(|e| io_failure(&a.input, e))?;
    let records = export::read_records(file).map_err(at(&a.input))?;
    let fam = family(s.map.as_deref().or(records.get("map")))?;
    if !(a.cert_tol > 0.0) {
        return Err(usage("--cert-tol must be positive"));
    }
    let parsed = records
        .rows
        .iter()
        .map(RecordRow::to_record)
        .collect::<Result<Vec<_>, _>>()?;
    let reports = parsed
        .par_iter()
        .map(|rec| verify_periodicity(&fam, rec, a.cert_tol))
        .collect::<Result<Vec<_>, _>>()?;

    let rows: Vec<RecordRow> = reports.iter().map(RecordRow::from).collect();
    let mut header: Vec<(&str, String)> = records
        .header
        .iter()
        .filter(|(k, _)| k != "cert_tol")
        .map(|(k, v)| (k.as_str(), v.clone()))
        .collect();
    header.push(("cert_tol", format!("{:e}", a.cert_tol)));
    let out = output(s.out.as_deref())?;
    export::write_records(out, &header, &rows)?;

    let converged = reports.iter().filter(|r| r.newton_converged).count();
    let failed: Vec<usize> = (0..reports.len())
        .filter(|&i| !reports[i].certified())
        .collect();
    let worst = reports
        .iter()
        .filter(|r| r.newton_converged)
        .map(|r| r.period_residual)
        .fold(0.0, f64::max);
    eprintln!(
        "verify {}: {} records, {converged} converged, {} certified, max residual {worst:e}",
        fam.name(),
        reports.len(),
        reports.len() - failed.len()
    );
    if failed.is_empty() {
        Ok(())
    } else {
        let shown: Vec<String> = failed
            .iter()
            .take(10)
            .map(|i| (i + 1).to_string())
            .collect();
        Err(Failure::Certification(format!(
            "{} of {} records not certified (rows {}{})",
            failed.len(),
            reports.len(),
            shown.join(", "),
            if failed.len() > 10 { ", ..." } else { "" }
        )))
    }
}
