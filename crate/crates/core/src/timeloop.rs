//! Frame and substep driver.

use std::time::Instant;

use crate::advect::{advect_scalar_compensated, advect_velocity};
use crate::extrapolate::{extrapolate_velocity, DEFAULT_LAYERS};
use crate::faces::{sample_nodes, FaceGeometry, OpenSides};
use crate::geometry::Scene;
use crate::grid::{FaceField, FaceMask, Field2, GridSpec};
use crate::krylov::CgSettings;
use crate::levelset::{classify_cells, occupancy, LevelSetField, Material, SurfaceKind};
use crate::projection::{
    bubble_fluxes, liquid_divergence, project, surface_tension_jumps, BubbleFlux, PhysicsParams,
    ProjectionProblem, ReducedSystem,
};
use crate::redistance::redistance;
use crate::regions::{find_enclosure_groups, prune_constraints, MaterialMap};
use crate::SimError;

/// Added to the speed in the CFL bound.
const SPEED_EPS: f64 = 1e-12;
/// Largest volume correction per substep, as a fraction of the volume.
const MAX_CORRECTION: f64 = 0.01;

/// Everything that stays fixed while a scene runs.
#[derive(Clone, Debug)]
pub struct SimSettings {
    pub spec: GridSpec,
    pub open: OpenSides,
    pub rho: f64,
    pub gravity: [f64; 2],
    pub sigma: f64,
    pub cfl: f64,
    pub max_substeps: usize,
    pub frame_rate: f64,
    pub volume_gain: f64,
    pub solver: CgSettings,
    pub bubbles_enabled: bool,
    /// Air regions containing any of these points are left unconstrained.
    pub freesurface_seeds: Vec<[f64; 2]>,
    pub extrapolation_layers: usize,
}

impl SimSettings {
    pub fn new(spec: GridSpec) -> Self {
        Self {
            spec,
            open: OpenSides::closed(),
            rho: 1000.0,
            gravity: [0.0, -9.81],
            sigma: 0.0,
            cfl: 1.0,
            max_substeps: 5,
            frame_rate: 30.0,
            volume_gain: 0.5,
            solver: CgSettings::default(),
            bubbles_enabled: true,
            freesurface_seeds: Vec::new(),
            extrapolation_layers: DEFAULT_LAYERS,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let check = |ok: bool, msg: String| {
            if ok {
                Ok(())
            } else {
                Err(SimError::Config(msg))
            }
        };
        check(
            self.rho > 0.0 && self.rho.is_finite(),
            format!("rho must be positive, got {}", self.rho),
        )?;
        check(
            self.sigma >= 0.0 && self.sigma.is_finite(),
            format!("sigma must be non-negative, got {}", self.sigma),
        )?;
        check(
            self.cfl > 0.0 && self.cfl.is_finite(),
            format!("cfl must be positive, got {}", self.cfl),
        )?;
        check(
            self.max_substeps >= 1,
            "max_substeps must be at least 1".into(),
        )?;
        check(
            self.frame_rate > 0.0 && self.frame_rate.is_finite(),
            format!("frame_rate must be positive, got {}", self.frame_rate),
        )?;
        check(
            self.volume_gain >= 0.0 && self.volume_gain.is_finite(),
            format!("volume_gain must be non-negative, got {}", self.volume_gain),
        )?;
        check(
            self.gravity.iter().all(|g| g.is_finite()),
            "gravity must be finite".into(),
        )?;
        check(
            self.solver.tolerance > 0.0,
            format!(
                "solver tolerance must be positive, got {}",
                self.solver.tolerance
            ),
        )
    }

    pub fn frame_dt(&self) -> f64 {
        1.0 / self.frame_rate
    }

    /// Capillary time step bound, if surface tension is on.
    pub fn surface_tension_dt(&self) -> Option<f64> {
        (self.sigma > 0.0).then(|| {
            let dx = self.spec.dx;
            (self.rho * dx * dx * dx / (2.0 * std::f64::consts::PI * self.sigma)).sqrt()
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SubstepDt {
    pub dt: f64,
    /// The substep cap forced a step longer than the CFL bound.
    pub stretched: bool,
}

/// Length of the next substep.
pub fn compute_substep_dt(
    max_speed: f64,
    dx: f64,
    cfl: f64,
    frame_remaining: f64,
    substeps_taken: usize,
    max_substeps: usize,
    extra_limit: Option<f64>,
) -> SubstepDt {
    let mut dt = frame_remaining.min(cfl * dx / (max_speed + SPEED_EPS));
    if let Some(limit) = extra_limit {
        dt = dt.min(limit);
    }
    let left = max_substeps.saturating_sub(substeps_taken).max(1);
    let needed = (frame_remaining / dt * (1.0 - 1e-12)).ceil() as usize;
    if needed > left {
        log::warn!("substep cap reached; stretching dt past the stability bound");
        return SubstepDt {
            dt: frame_remaining / left as f64,
            stretched: true,
        };
    }
    if dt >= frame_remaining * (1.0 - 1e-12) {
        dt = frame_remaining;
    }
    SubstepDt {
        dt,
        stretched: false,
    }
}

/// Uniform divergence source steering the liquid volume toward its target.
pub fn volume_correction_source(current: f64, target: f64, gain: f64, dt: f64) -> f64 {
    if gain == 0.0 || current <= 0.0 || dt <= 0.0 {
        return 0.0;
    }
    let s = gain * (target - current) / current / dt;
    s.clamp(-MAX_CORRECTION / dt, MAX_CORRECTION / dt)
}

/// Liquid area of the non-solid cells from the smoothed occupancy.
pub fn liquid_volume(spec: &GridSpec, phi_liquid: &Field2, labels: &[Material]) -> f64 {
    let cell = spec.dx * spec.dx;
    phi_liquid
        .data()
        .iter()
        .zip(labels)
        .filter(|(_, m)| **m != Material::Solid)
        .map(|(phi, _)| occupancy(*phi, spec.dx) * cell)
        .sum()
}

/// Replace level set values inside solids by layered averages of their
/// non-solid neighbors so the liquid surface meets walls cleanly.
pub fn extend_into_solid(spec: &GridSpec, phi: &mut Field2, solid: &[bool]) {
    let (nx, ny) = (spec.nx, spec.ny);
    let mut known: Vec<bool> = solid.iter().map(|s| !s).collect();
    loop {
        let mut updates = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                let c = j * nx + i;
                if known[c] {
                    continue;
                }
                let (mut sum, mut n) = (0.0, 0);
                let mut add = |k: usize| {
                    if known[k] {
                        sum += phi.data()[k];
                        n += 1;
                    }
                };
                if i > 0 {
                    add(c - 1);
                }
                if i + 1 < nx {
                    add(c + 1);
                }
                if j > 0 {
                    add(c - nx);
                }
                if j + 1 < ny {
                    add(c + nx);
                }
                if n > 0 {
                    updates.push((c, sum / n as f64));
                }
            }
        }
        if updates.is_empty() {
            break;
        }
        for (c, v) in updates {
            phi.data_mut()[c] = v;
            known[c] = true;
        }
    }
}

#[derive(Clone, Debug)]
pub struct SimState {
    pub velocity: FaceField,
    pub valid: FaceMask,
    pub phi_liquid: LevelSetField,
    pub phi_solid: LevelSetField,
    pub t: f64,
    pub frame_index: usize,
    pub liquid_volume_target: f64,
}

/// Measurements of one substep.
#[derive(Clone, Debug, PartialEq)]
pub struct SubstepRecord {
    pub frame: usize,
    pub substep: usize,
    pub t: f64,
    pub dt: f64,
    pub stretched: bool,
    pub n_bubbles: usize,
    pub n_active: usize,
    /// Air cell count times cell area, by bubble id.
    pub bubble_volumes: Vec<f64>,
    pub liquid_volume: f64,
    pub cg_iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
    pub assembly_time: f64,
    pub solve_time: f64,
    pub u_star_max: f64,
    pub max_speed: f64,
    pub max_divergence: f64,
    /// Largest net boundary flux over the constrained bubbles.
    pub max_constraint_flux: f64,
    pub fluxes: Vec<BubbleFlux>,
    pub volume_source: f64,
}

impl SubstepRecord {
    pub fn solid_flux(&self) -> f64 {
        self.fluxes.iter().map(|f| f.solid).sum()
    }

    pub fn liquid_flux(&self) -> f64 {
        self.fluxes.iter().map(|f| f.liquid).sum()
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepStats {
    pub frame: usize,
    pub substeps: Vec<SubstepRecord>,
}

impl StepStats {
    pub fn cg_iterations(&self) -> usize {
        self.substeps.iter().map(|s| s.cg_iterations).sum()
    }
}

pub struct Simulation {
    pub settings: SimSettings,
    pub solids: Scene,
    pub state: SimState,
    /// Materials and bubbles of the most recent projection.
    pub last_map: Option<MaterialMap>,
    pub last_geometry: Option<FaceGeometry>,
    /// The system whose solve failed, kept for inspection.
    pub failed_system: Option<ReducedSystem>,
}

impl Simulation {
    /// Starts from the liquid described by `liquid` (negative inside) at rest
    /// or with the given initial velocity.
    pub fn new(
        settings: SimSettings,
        solids: Scene,
        liquid: &Scene,
        initial_velocity: Option<FaceField>,
    ) -> Result<Self, SimError> {
        settings.validate()?;
        let spec = settings.spec;
        let phi_l = LevelSetField::from_sdf(&spec, SurfaceKind::Liquid, |p| liquid.sdf(p, 0.0));
        let phi_s = LevelSetField::from_sdf(&spec, SurfaceKind::Solid, |p| solids.sdf(p, 0.0));
        let phi_l = LevelSetField::new(redistance(&spec, &phi_l.phi).phi, SurfaceKind::Liquid);
        let velocity = match initial_velocity {
            Some(v) => {
                if v.u.shape() != spec.face_shape(crate::grid::Axis::X)
                    || v.v.shape() != spec.face_shape(crate::grid::Axis::Y)
                {
                    return Err(SimError::DimensionMismatch {
                        what: "initial velocity",
                        expected: spec.faces().count(),
                        found: v.u.data().len() + v.v.data().len(),
                    });
                }
                v
            }
            None => FaceField::new(&spec, 0.0),
        };
        let labels = classify_cells(&phi_l, &phi_s)?;
        let target = liquid_volume(&spec, &phi_l.phi, &labels);
        Ok(Self {
            state: SimState {
                velocity,
                valid: FaceMask::new(&spec, true),
                phi_liquid: phi_l,
                phi_solid: phi_s,
                t: 0.0,
                frame_index: 0,
                liquid_volume_target: target,
            },
            settings,
            solids,
            last_map: None,
            last_geometry: None,
            failed_system: None,
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.settings.spec
    }

    /// Current labels from the stored level sets.
    pub fn labels(&self) -> Vec<Material> {
        classify_cells(&self.state.phi_liquid, &self.state.phi_solid)
            .expect("level sets share the grid")
    }

    pub fn step_frame(&mut self) -> Result<StepStats, SimError> {
        self.step_frame_with(|_, _| {})
    }

    /// Advance one frame. `on_system` sees every assembled system with its
    /// substep number.
    pub fn step_frame_with(
        &mut self,
        mut on_system: impl FnMut(usize, &ReducedSystem),
    ) -> Result<StepStats, SimError> {
        let frame_dt = self.settings.frame_dt();
        let frame_end = (self.state.frame_index + 1) as f64 * frame_dt;
        let mut stats = StepStats {
            frame: self.state.frame_index,
            substeps: Vec::new(),
        };
        let mut taken = 0;
        while frame_end - self.state.t > 1e-12 * frame_dt {
            let remaining = frame_end - self.state.t;
            let sdt = compute_substep_dt(
                self.state.velocity.max_abs(),
                self.settings.spec.dx,
                self.settings.cfl,
                remaining,
                taken,
                self.settings.max_substeps,
                self.settings.surface_tension_dt(),
            );
            let record = self.substep(stats.frame, taken, sdt, &mut on_system)?;
            stats.substeps.push(record);
            taken += 1;
        }
        self.state.t = frame_end;
        self.state.frame_index += 1;
        Ok(stats)
    }

    fn substep(
        &mut self,
        frame: usize,
        substep: usize,
        sdt: SubstepDt,
        on_system: &mut impl FnMut(usize, &ReducedSystem),
    ) -> Result<SubstepRecord, SimError> {
        let spec = self.settings.spec;
        let dt = sdt.dt;
        let t_new = self.state.t + dt;
        let t_mid = self.state.t + 0.5 * dt;

        // solids at the end of the substep
        let phi_s =
            LevelSetField::from_sdf(&spec, SurfaceKind::Solid, |p| self.solids.sdf(p, t_new));
        let solid_nodes = sample_nodes(&spec, |p| self.solids.sdf(p, t_new));

        let solid_now: Vec<bool> = self
            .state
            .phi_solid
            .phi
            .data()
            .iter()
            .map(|s| *s < 0.0)
            .collect();
        let mut phi_l = self.state.phi_liquid.phi.clone();
        extend_into_solid(&spec, &mut phi_l, &solid_now);

        let phi_l = advect_scalar_compensated(&spec, &phi_l, &self.state.velocity, dt);
        let mut u_star = advect_velocity(&spec, &self.state.velocity, dt);
        let g = self.settings.gravity;
        u_star.u.data_mut().iter_mut().for_each(|u| *u += g[0] * dt);
        u_star.v.data_mut().iter_mut().for_each(|v| *v += g[1] * dt);

        let phi_l = LevelSetField::new(redistance(&spec, &phi_l).phi, SurfaceKind::Liquid);
        let labels = classify_cells(&phi_l, &phi_s)?;
        let open = self.settings.open;
        let geom = FaceGeometry::build(&spec, &labels, &phi_l.phi, &solid_nodes, open, |f| {
            self.solids.sample_solid_velocity(&spec, f, t_new, t_mid)
        });
        let mut map = MaterialMap::new(spec, labels, &geom);
        if self.settings.bubbles_enabled {
            let groups = find_enclosure_groups(&spec, &map.labels, &map.bubble_id, open);
            let mut free: Vec<usize> = self
                .settings
                .freesurface_seeds
                .iter()
                .filter_map(|p| map.bubble_at(*p))
                .collect();
            free.extend(map.bubbles_touching(open));
            map.active = prune_constraints(&map, &groups, &free);
        } else {
            map.deactivate_all();
        }

        let volume = liquid_volume(&spec, &phi_l.phi, &map.labels);
        let source = volume_correction_source(
            volume,
            self.state.liquid_volume_target,
            self.settings.volume_gain,
            dt,
        );
        let jumps = surface_tension_jumps(&spec, &map, &geom, &phi_l.phi, self.settings.sigma);
        let problem = ProjectionProblem {
            spec: &spec,
            u_star: &u_star,
            map: &map,
            geom: &geom,
            jumps: &jumps,
            params: PhysicsParams {
                rho: self.settings.rho,
                gravity: g,
                sigma: self.settings.sigma,
                dt,
            },
            open,
            source,
        };
        let outcome = match project(&problem, &self.settings.solver) {
            Ok(o) => o,
            Err(e) => {
                self.failed_system = Some(crate::projection::assemble_reduced_system(&problem));
                return Err(e);
            }
        };
        on_system(substep, &outcome.system);
        if !outcome.report.converged {
            let err = SimError::NotConverged {
                iterations: outcome.report.iterations,
                residual: outcome.report.relative_residual,
            };
            self.failed_system = Some(outcome.system);
            return Err(err);
        }

        let fluxes = bubble_fluxes(
            &problem,
            &outcome.system.active,
            &outcome.projected.velocity,
        );
        let max_divergence = liquid_divergence(&problem, &outcome.projected.velocity)
            .iter()
            .fold(0.0_f64, |m, d| m.max(d.abs()));
        let (velocity, valid) = extrapolate_velocity(
            &spec,
            &outcome.projected.velocity,
            &outcome.projected.valid,
            self.settings.extrapolation_layers,
        );
        let cell = spec.dx * spec.dx;
        let mut active_map = map;
        active_map.active = outcome.system.active.clone();
        let record = SubstepRecord {
            frame,
            substep,
            t: t_new,
            dt,
            stretched: sdt.stretched,
            n_bubbles: active_map.n_bubbles,
            n_active: active_map.n_active(),
            bubble_volumes: active_map
                .bubble_cell_counts()
                .iter()
                .map(|c| *c as f64 * cell)
                .collect(),
            liquid_volume: volume,
            cg_iterations: outcome.report.iterations,
            relative_residual: outcome.report.relative_residual,
            converged: outcome.report.converged,
            assembly_time: outcome.assembly_time,
            solve_time: outcome.solve_time,
            u_star_max: u_star.max_abs(),
            max_speed: velocity.max_abs(),
            max_divergence,
            max_constraint_flux: fluxes.iter().fold(0.0_f64, |m, f| m.max(f.net().abs())),
            fluxes,
            volume_source: source,
        };

        self.state.velocity = velocity;
        self.state.valid = valid;
        self.state.phi_liquid = phi_l;
        self.state.phi_solid = phi_s;
        self.state.t = t_new;
        self.last_map = Some(active_map);
        self.last_geometry = Some(geom);
        Ok(record)
    }
}

/// Wall-clock helper for callers timing whole frames.
pub fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let t0 = Instant::now();
    let out = f();
    (out, t0.elapsed().as_secs_f64())
}
