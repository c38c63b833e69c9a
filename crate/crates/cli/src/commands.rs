use anyhow::{anyhow, Context};
use catenoid_core::geometry::{self, CatenoidConstants};
use catenoid_core::spectrum::{self, certified_window, EigenvalueRecord, SpectrumReport};
use catenoid_core::{fd_oracle, verify as suite};
use serde::Serialize;

use crate::output::{fmt_f64, to_csv, to_json, Num};
use crate::{ensure_range, EigenfunctionArgs, Format, Outcome, RunConfig, ScanArgs};

/// Index and nullity that `index` treats as a regression target whenever
/// modes 0 and 1 are both searched.
pub const EXPECTED_INDEX: usize = 4;
pub const EXPECTED_NULLITY: usize = 2;

fn constants_of(cfg: &RunConfig) -> anyhow::Result<CatenoidConstants> {
    Ok(geometry::solve_balance_length(cfg.root_tol)?)
}

fn ok(text: String) -> Outcome {
    Outcome {
        text,
        exit_code: 0,
        diagnostics: Vec::new(),
        written_to: None,
    }
}

#[derive(Serialize)]
struct ConstantsOut {
    #[serde(rename = "L")]
    half_length: Num,
    #[serde(rename = "R")]
    scale: Num,
    residual: Num,
    root_tol: Num,
    tanh_identity: Num,
    sphere_defect: Num,
    contact_flux: Num,
}

pub fn constants(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let c = constants_of(cfg)?;
    let l = c.half_length;
    let mut sphere = 0.0_f64;
    let mut flux = 0.0_f64;
    for k in 0..32 {
        let theta = std::f64::consts::TAU * k as f64 / 32.0;
        for x in [-l, l] {
            let p = geometry::parametrize(&c, theta, x)?.position;
            sphere = sphere.max((p.iter().map(|v| v * v).sum::<f64>().sqrt() - 1.0).abs());
            flux = flux.max(geometry::contact_flux(&c, theta, x)?.abs());
        }
    }
    let out = ConstantsOut {
        half_length: Num(l),
        scale: Num(c.scale),
        residual: Num(c.residual()),
        root_tol: Num(c.root_tol),
        tanh_identity: Num(l * l.tanh() - 1.0),
        sphere_defect: Num(sphere),
        contact_flux: Num(flux),
    };
    let text = match cfg.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&out)?,
        Format::Csv => to_csv(
            &["quantity", "value"],
            [
                ("L", out.half_length),
                ("R", out.scale),
                ("residual", out.residual),
                ("root_tol", out.root_tol),
                ("tanh_identity", out.tanh_identity),
                ("sphere_defect", out.sphere_defect),
                ("contact_flux", out.contact_flux),
            ]
            .map(|(k, v)| [k.to_owned(), fmt_f64(v.0)]),
        )?,
    };
    Ok(ok(text))
}

#[derive(Serialize)]
struct RecordOut {
    m: u32,
    parity: &'static str,
    lambda_star: Num,
    multiplicity: usize,
    bracket: [Num; 2],
    residual: Num,
    geometric_eigenvalue: Num,
}

impl RecordOut {
    fn new(r: &EigenvalueRecord, c: &CatenoidConstants) -> Self {
        Self {
            m: r.m,
            parity: r.parity.as_str(),
            lambda_star: Num(r.lambda_star),
            multiplicity: r.multiplicity,
            bracket: [Num(r.bracket.0), Num(r.bracket.1)],
            residual: Num(r.residual),
            geometric_eigenvalue: Num(r.geometric_eigenvalue(c) + 0.0),
        }
    }
}

#[derive(Serialize)]
struct ModeCountOut {
    mode: i64,
    negative: usize,
    null: usize,
}

#[derive(Serialize)]
struct SettingsOut {
    root_tol: Num,
    step_tol: Num,
    bisect_tol: Num,
    nullity_tol: Num,
    n_scan: usize,
    oracle_n: u64,
    modes: Vec<u32>,
}

#[derive(Serialize)]
struct OracleModeOut {
    m: u32,
    negative_count: usize,
    lambdas: Vec<Num>,
    extrapolated: Vec<Num>,
    max_relative_gap: Num,
}

#[derive(Serialize)]
struct OracleOut {
    n: usize,
    n_coarse: usize,
    counts_agree: bool,
    modes: Vec<OracleModeOut>,
}

#[derive(Serialize)]
struct IndexOut {
    index: usize,
    nullity: usize,
    per_mode: Vec<ModeCountOut>,
    records: Vec<RecordOut>,
    #[serde(rename = "L")]
    half_length: Num,
    #[serde(rename = "R")]
    scale: Num,
    rotation_robin_defect: Num,
    eigenvalue_convention: &'static str,
    settings: SettingsOut,
    diagnostics: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<OracleOut>,
}

fn oracle_block(c: &CatenoidConstants, report: &SpectrumReport, n: usize) -> anyhow::Result<OracleOut> {
    let n_coarse = n / 2;
    let modes = report.settings.execution.map(&report.settings.modes, |&m| -> anyhow::Result<OracleModeOut> {
        let fine = fd_oracle::assemble(c, m, n)?;
        let count = fd_oracle::count_negative_mu(&fine)?;
        let lambdas = fd_oracle::negative_lambdas(&fine)?;
        let extrapolated = if n_coarse >= 64 {
            fd_oracle::extrapolated_lambdas(c, m, n_coarse, n)?
        } else {
            lambdas.clone()
        };
        let mut shooting: Vec<f64> = report
            .records
            .iter()
            .filter(|r| r.m == m && !r.is_kernel(report.settings.nullity_tol))
            .map(|r| r.lambda_star)
            .collect();
        shooting.sort_by(f64::total_cmp);
        let gap = if shooting.len() == extrapolated.len() {
            shooting
                .iter()
                .zip(&extrapolated)
                .map(|(a, b)| (a - b).abs() / b.abs())
                .fold(0.0, f64::max)
        } else {
            f64::INFINITY
        };
        Ok(OracleModeOut {
            m,
            negative_count: count,
            lambdas: lambdas.into_iter().map(Num).collect(),
            extrapolated: extrapolated.into_iter().map(Num).collect(),
            max_relative_gap: Num(gap),
        })
    });
    let modes = modes.into_iter().collect::<anyhow::Result<Vec<_>>>()?;
    let counts_agree = modes.iter().all(|o| {
        report.per_mode.iter().filter(|pm| pm.mode == o.m as i64).all(|pm| pm.negative == o.negative_count)
    });
    Ok(OracleOut {
        n,
        n_coarse,
        counts_agree,
        modes,
    })
}

pub fn index(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let c = constants_of(cfg)?;
    let settings = cfg.spectrum_settings();
    let report = spectrum::morse_index(&c, &settings)?;
    let oracle = if cfg.skip_oracle {
        None
    } else {
        Some(oracle_block(&c, &report, cfg.oracle_n as usize)?)
    };

    let out = IndexOut {
        index: report.index,
        nullity: report.nullity,
        per_mode: report
            .per_mode
            .iter()
            .map(|m| ModeCountOut {
                mode: m.mode,
                negative: m.negative,
                null: m.null,
            })
            .collect(),
        records: report.records.iter().map(|r| RecordOut::new(r, &c)).collect(),
        half_length: Num(c.half_length),
        scale: Num(c.scale),
        rotation_robin_defect: Num(report.rotation_robin_defect),
        eigenvalue_convention: "lambda_star: conformal coordinates, Jacobi eigenvalue -lambda_star; geometric_eigenvalue: -R^2 lambda_star in the surface metric",
        settings: SettingsOut {
            root_tol: Num(cfg.root_tol),
            step_tol: Num(settings.step_tol),
            bisect_tol: Num(settings.bisect_tol),
            nullity_tol: Num(settings.nullity_tol),
            n_scan: settings.n_scan,
            oracle_n: cfg.oracle_n,
            modes: settings.modes.clone(),
        },
        diagnostics: report.diagnostics.clone(),
        oracle,
    };

    let text = match cfg.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&out)?,
        Format::Csv => {
            let mut rows = vec![
                ["index".to_owned(), out.index.to_string()],
                ["nullity".to_owned(), out.nullity.to_string()],
            ];
            for m in &out.per_mode {
                rows.push([format!("mode_{}_negative", m.mode), m.negative.to_string()]);
                rows.push([format!("mode_{}_null", m.mode), m.null.to_string()]);
            }
            for r in &report.records {
                rows.push([format!("lambda_m{}_{}", r.m, r.parity), fmt_f64(r.lambda_star)]);
            }
            to_csv(&["quantity", "value"], rows)?
        }
    };

    let searched = |m| settings.modes.contains(&m);
    let regression_failed = searched(0)
        && searched(1)
        && (report.index != EXPECTED_INDEX || report.nullity != EXPECTED_NULLITY);
    Ok(Outcome {
        text,
        exit_code: i32::from(regression_failed),
        diagnostics: report.diagnostics,
        written_to: None,
    })
}

pub fn scan(cfg: &RunConfig, args: &ScanArgs) -> anyhow::Result<Outcome> {
    ensure_range(args.lambda_min, args.lambda_max)?;
    if args.n < 2 {
        return Err(anyhow!("scan needs at least 2 points, got {}", args.n));
    }
    let c = constants_of(cfg)?;
    let settings = cfg.spectrum_settings();
    let step = (args.lambda_max - args.lambda_min) / (args.n - 1) as f64;
    let grid: Vec<f64> = (0..args.n)
        .map(|k| if k + 1 == args.n { args.lambda_max } else { args.lambda_min + step * k as f64 })
        .collect();
    let rows = spectrum::phi_scan(&c, args.m, args.parity, &grid, &settings.shoot_settings(), settings.execution)?;

    #[derive(Serialize)]
    struct Row {
        lambda: Num,
        mismatch: Num,
        #[serde(rename = "gammaL")]
        gamma_end: Option<Num>,
    }
    #[derive(Serialize)]
    struct ScanOut {
        m: u32,
        parity: &'static str,
        window: Num,
        rows: Vec<Row>,
    }

    let text = match cfg.format.unwrap_or(Format::Csv) {
        Format::Csv => to_csv(
            &["lambda", "mismatch", "gammaL"],
            rows.iter().map(|r| {
                [
                    fmt_f64(r.lambda),
                    fmt_f64(r.mismatch),
                    r.gamma_end.map(fmt_f64).unwrap_or_else(|| "pole".to_owned()),
                ]
            }),
        )?,
        Format::Json => to_json(&ScanOut {
            m: args.m,
            parity: args.parity.as_str(),
            window: Num(certified_window(args.m)),
            rows: rows
                .iter()
                .map(|r| Row {
                    lambda: Num(r.lambda),
                    mismatch: Num(r.mismatch),
                    gamma_end: r.gamma_end.map(Num),
                })
                .collect(),
        })?,
    };
    Ok(ok(text))
}

pub fn eigenfunction(cfg: &RunConfig, args: &EigenfunctionArgs) -> anyhow::Result<Outcome> {
    let c = constants_of(cfg)?;
    let settings = cfg.spectrum_settings();
    let window = certified_window(args.m);
    let search = spectrum::find_eigenvalues_in_mode(&c, args.m, args.parity, window, &settings)?;
    let record = search.records.get(args.which).with_context(|| {
        format!(
            "mode m={} {} has {} record(s); no record with index {}",
            args.m,
            args.parity,
            search.records.len(),
            args.which
        )
    })?;
    let profile = spectrum::eigenfunction(&c, record, args.samples, &settings.shoot_settings())?;

    #[derive(Serialize)]
    struct ProfileOut {
        m: u32,
        parity: &'static str,
        lambda_star: Num,
        boundary_residual: Num,
        x: Vec<Num>,
        f: Vec<Num>,
    }

    let text = match cfg.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut rows: Vec<[String; 2]> = profile
                .xs
                .iter()
                .zip(&profile.f)
                .map(|(x, f)| [fmt_f64(*x), fmt_f64(*f)])
                .collect();
            rows.push(["lambda_star".to_owned(), fmt_f64(profile.lambda_star)]);
            to_csv(&["x", "f"], rows)?
        }
        Format::Json => to_json(&ProfileOut {
            m: profile.m,
            parity: profile.parity.as_str(),
            lambda_star: Num(profile.lambda_star),
            boundary_residual: Num(profile.boundary_residual),
            x: profile.xs.iter().copied().map(Num).collect(),
            f: profile.f.iter().copied().map(Num).collect(),
        })?,
    };
    Ok(Outcome {
        text,
        exit_code: 0,
        diagnostics: search.diagnostic.into_iter().collect(),
        written_to: None,
    })
}

pub fn verify(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let checks = suite::run(&cfg.verify_config())?;
    let all = checks.iter().all(|c| c.pass);

    #[derive(Serialize)]
    struct CheckOut<'a> {
        name: &'a str,
        pass: bool,
        detail: &'a str,
    }
    #[derive(Serialize)]
    struct VerifyOut<'a> {
        pass: bool,
        checks: Vec<CheckOut<'a>>,
    }

    let text = match cfg.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&VerifyOut {
            pass: all,
            checks: checks
                .iter()
                .map(|c| CheckOut {
                    name: c.name,
                    pass: c.pass,
                    detail: &c.detail,
                })
                .collect(),
        })?,
        Format::Csv => to_csv(
            &["name", "pass", "detail"],
            checks.iter().map(|c| [c.name.to_owned(), c.pass.to_string(), c.detail.clone()]),
        )?,
    };
    Ok(Outcome {
        text,
        exit_code: i32::from(!all),
        diagnostics: Vec::new(),
        written_to: None,
    })
}
