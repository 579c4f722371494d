//! The sweep commands. Grid points are evaluated on a worker pool and
//! collected back in grid order, so output never depends on scheduling.

use rayon::prelude::*;
use spinflip_core::atomics::{thermal_photon_number, SpinVector};
use spinflip_core::layered_media::{LayerStack, PermittivityModel};
use spinflip_core::rates_coherence::{apply_thermal, rho12_from_parts, Engine};

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::table::{format_label, Column, Table};

const UM: f64 = 1e-6;

/// One stack configuration in a sweep: distance plus optional top-layer
/// thickness and skin depth, kept in um so labels stay exact.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Point {
    d_um: f64,
    h_um: Option<f64>,
    delta_um: Option<f64>,
}

impl Point {
    fn d(&self) -> f64 {
        self.d_um * UM
    }

    fn context(&self) -> String {
        let mut s = format!("at d = {} um", format_label(self.d_um));
        if let Some(h) = self.h_um {
            s.push_str(&format!(", h = {} um", format_label(h)));
        }
        if let Some(delta) = self.delta_um {
            s.push_str(&format!(", delta = {} um", format_label(delta)));
        }
        s
    }
}

fn optional_axis(values_um: &[f64]) -> Vec<Option<f64>> {
    if values_um.is_empty() {
        vec![None]
    } else {
        values_um.iter().copied().map(Some).collect()
    }
}

/// Everything the commands need, resolved to SI once.
pub struct Context {
    pub config: RunConfig,
    pub engine: Engine,
    pub omega: f64,
    pub spin: SpinVector,
    pub temperature: f64,
    pool: rayon::ThreadPool,
}

impl Context {
    pub fn new(config: RunConfig, jobs: Option<usize>) -> Result<Self> {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = jobs {
            if n == 0 {
                return Err(CliError::config("--jobs must be at least 1"));
            }
            builder = builder.num_threads(n);
        }
        let pool = builder
            .build()
            .map_err(|e| CliError::config(format!("cannot start worker pool: {e}")))?;
        Ok(Self {
            engine: config.engine()?,
            omega: config.omega(),
            spin: config.spin()?,
            temperature: config.atom.temperature_k,
            config,
            pool,
        })
    }

    fn map_ordered<T, R, F>(&self, items: &[T], f: F) -> Result<Vec<R>>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> Result<R> + Sync,
    {
        let results: Vec<Result<R>> = self.pool.install(|| items.par_iter().map(&f).collect());
        results.into_iter().collect()
    }

    fn stack(&self, p: &Point) -> Result<LayerStack> {
        self.config.stack_for(p.h_um.map(|h| h * UM), p.delta_um.map(|v| v * UM))
    }

    fn describe(&self) -> String {
        format!(
            "f = {} Hz, T = {} K, axis {}, {} kernel, rel_tol {:e}",
            format_label(self.config.atom.frequency_hz),
            format_label(self.temperature),
            self.config.geometry.axis,
            self.config.numerics.mode,
            self.config.numerics.rel_tol
        )
    }

    /// Top-layer skin depth of the configured stack, in um, with the
    /// metre round trip rounded away.
    fn base_skin_depth_um(&self) -> Option<f64> {
        let stack = self.config.base_stack().ok()?;
        match stack.layers().first()?.model {
            PermittivityModel::Drude { skin_depth } => Some((skin_depth / UM * 1e9).round() / 1e9),
            _ => None,
        }
    }
}

/// Rates and line shifts for every (delta, h, d) combination.
pub fn rate(ctx: &Context) -> Result<Vec<Table>> {
    let g = &ctx.config.geometry;
    let mut points = Vec::new();
    for &delta in &optional_axis(&g.delta_um) {
        for &h in &optional_axis(&g.h_um) {
            for &d in &g.d_um {
                points.push(Point { d_um: d, h_um: h, delta_um: delta });
            }
        }
    }
    let thermal = thermal_photon_number(ctx.omega, ctx.temperature, &ctx.engine.constants)
        .map_err(|e| CliError::at("for the thermal factor", e))?
        + 1.0;
    let rows = ctx.map_ordered(&points, |p| {
        let at = |e| CliError::at(p.context(), e);
        let stack = ctx.stack(p)?;
        let r = ctx.engine.rate(p.d(), ctx.omega, &stack, &ctx.spin, ctx.temperature).map_err(at)?;
        let (closed, _) = ctx.engine.gamma12_closed_form(p.d(), ctx.omega, &stack).map_err(at)?;
        let closed = apply_thermal(closed, ctx.omega, ctx.temperature, &ctx.engine.constants).map_err(at)?;
        Ok(vec![
            Some(p.d_um),
            p.h_um,
            p.delta_um,
            Some(r.gamma12),
            Some(closed),
            Some(r.delta_omega),
            Some(r.thermal_factor),
        ])
    })?;
    let mut table = Table::new(
        "rates",
        format!("spin-flip rates and line shifts; {}; thermal factor {thermal}", ctx.describe()),
        vec![
            Column::new("d_um", "um"),
            Column::new("h_um", "um"),
            Column::new("delta_um", "um"),
            Column::new("gamma12", "1/s"),
            Column::new("gamma12_closed_form", "1/s"),
            Column::new("delta_omega", "rad/s"),
            Column::new("thermal_factor", "1"),
        ],
    );
    for row in rows {
        table.push(row);
    }
    Ok(vec![table])
}

/// S(l), its small-l expansion and rho12 at the configured times, one
/// file per stack configuration and distance.
pub fn coherence(ctx: &Context) -> Result<Vec<Table>> {
    let g = &ctx.config.geometry;
    if g.l_um.is_empty() {
        return Err(CliError::config("coherence needs a non-empty geometry.l_um"));
    }
    let mut groups = Vec::new();
    for &delta in &optional_axis(&g.delta_um) {
        for &h in &optional_axis(&g.h_um) {
            for &d in &g.d_um {
                groups.push(Point { d_um: d, h_um: h, delta_um: delta });
            }
        }
    }
    // Per group: thermal rate and small-l coefficient.
    let per_group = ctx.map_ordered(&groups, |p| {
        let at = |e| CliError::at(p.context(), e);
        let stack = ctx.stack(p)?;
        let (gamma0, _) = ctx.engine.gamma_general(p.d(), ctx.omega, &stack, &ctx.spin).map_err(at)?;
        let gamma = apply_thermal(gamma0, ctx.omega, ctx.temperature, &ctx.engine.constants).map_err(at)?;
        let c2 = ctx.engine.small_l_coefficient(p.d(), ctx.omega, &stack).map_err(at)?;
        Ok((gamma, c2))
    })?;
    let cells: Vec<(usize, f64)> = (0..groups.len())
        .flat_map(|gi| g.l_um.iter().map(move |&l| (gi, l)))
        .collect();
    let s_values = ctx.map_ordered(&cells, |&(gi, l)| {
        let p = &groups[gi];
        let stack = ctx.stack(p)?;
        ctx.engine
            .coherence_s(l * UM, p.d(), ctx.omega, &stack, &ctx.spin)
            .map_err(|e| CliError::at(format!("{}, l = {} um", p.context(), format_label(l)), e))
    })?;

    let mut columns = vec![
        Column::new("l_um", "um"),
        Column::new("S", "1"),
        Column::new("S_small_l", "1"),
    ];
    for &t in &g.t_s {
        columns.push(Column::new(format!("rho12(t={}s)", format_label(t)), "1"));
    }
    let sweep_h = !g.h_um.is_empty();
    let sweep_delta = !g.delta_um.is_empty();
    let mut tables = Vec::new();
    for (gi, p) in groups.iter().enumerate() {
        let (gamma, c2) = per_group[gi];
        let mut stem = format!("fig1_d{}", format_label(p.d_um));
        if sweep_h {
            stem.push_str(&format!("_h{}", format_label(p.h_um.unwrap_or(0.0))));
        }
        if sweep_delta {
            stem.push_str(&format!("_delta{}", format_label(p.delta_um.unwrap_or(0.0))));
        }
        let mut table = Table::new(
            stem,
            format!(
                "spatial coherence {}; {}; gamma12 = {gamma:e} 1/s; c2 = {c2:e} 1/m^2",
                p.context(),
                ctx.describe()
            ),
            columns.clone(),
        );
        for (li, &l_um) in g.l_um.iter().enumerate() {
            let s = s_values[gi * g.l_um.len() + li];
            let l = l_um * UM;
            let mut row = vec![Some(l_um), Some(s), Some(1.0 - c2 * l * l)];
            for &t in &g.t_s {
                let rho = rho12_from_parts(t, gamma, s).map_err(|e| CliError::at(p.context(), e))?;
                row.push(Some(rho));
            }
            table.push(row);
        }
        tables.push(table);
    }
    Ok(tables)
}

/// Half-coherence length against film thickness, one file per skin depth.
pub fn halfwidth(ctx: &Context) -> Result<Vec<Table>> {
    let g = &ctx.config.geometry;
    if g.h_um.is_empty() {
        return Err(CliError::config(
            "halfwidth sweeps the film thickness and needs a non-empty geometry.h_um",
        ));
    }
    let deltas = optional_axis(&g.delta_um);
    let mut points = Vec::new();
    for &delta in &deltas {
        for &d in &g.d_um {
            for &h in &g.h_um {
                points.push(Point {
                    d_um: d,
                    h_um: Some(h),
                    delta_um: delta,
                });
            }
        }
    }
    let l_half = ctx.map_ordered(&points, |p| {
        let stack = ctx.stack(p)?;
        ctx.engine
            .half_coherence_length(p.d(), ctx.omega, &stack, &ctx.spin)
            .map_err(|e| CliError::at(p.context(), e))
    })?;
    let per_delta = g.d_um.len() * g.h_um.len();
    let mut tables = Vec::new();
    for (di, delta) in deltas.iter().enumerate() {
        let delta_um = delta.or_else(|| ctx.base_skin_depth_um());
        let stem = match delta_um {
            Some(v) => format!("fig2_delta{}", format_label(v)),
            None => "fig2".to_string(),
        };
        let mut table = Table::new(
            stem,
            format!("half-coherence length against film thickness; {}", ctx.describe()),
            vec![
                Column::new("delta_um", "um"),
                Column::new("d_um", "um"),
                Column::new("h_um", "um"),
                Column::new("l_half_um", "um"),
            ],
        );
        for k in 0..per_delta {
            let idx = di * per_delta + k;
            let p = &points[idx];
            table.push(vec![
                delta_um,
                Some(p.d_um),
                p.h_um,
                Some(l_half[idx] / UM),
            ]);
        }
        tables.push(table);
    }
    Ok(tables)
}
