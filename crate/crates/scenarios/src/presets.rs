//! Built-in scenes.

use crate::config::{
    ConfigError, GridConfig, MotionConfig, OpenSidesConfig, OutputConfig, PhysicsConfig,
    PrimitiveConfig, ScenarioConfig, SolverConfig,
};

pub const PRESET_NAMES: [&str; 7] = [
    "hydrostatic",
    "trapped_bubble",
    "rising_bubble",
    "wall_with_holes",
    "moving_platform",
    "water_cooler_2d",
    "surface_tension_square",
];

/// Cell size of the default 96-cell resolution.
const H: f64 = 1.0 / 96.0;

/// Everything below `y` across the whole domain (and beyond its walls).
fn below(y: f64) -> PrimitiveConfig {
    PrimitiveConfig::boxed([-1.0, -1.0], [3.0, y])
}

fn base(name: &str, nx: usize, ny: usize, n_frames: usize) -> ScenarioConfig {
    ScenarioConfig {
        name: name.to_string(),
        grid: GridConfig {
            nx,
            ny,
            dx: H,
            origin: [0.0, 0.0],
            open_sides: OpenSidesConfig::default(),
        },
        physics: PhysicsConfig {
            n_frames,
            ..PhysicsConfig::default()
        },
        solver: SolverConfig::default(),
        solids: Vec::new(),
        liquid: Vec::new(),
        freesurface_seeds: Vec::new(),
        bubbles_enabled: true,
        output: OutputConfig::default(),
        seed: 0,
        perturbation: 0.0,
    }
}

pub fn build_preset(name: &str) -> Result<ScenarioConfig, ConfigError> {
    let cfg = match name {
        "hydrostatic" => hydrostatic(),
        "trapped_bubble" => trapped_bubble(),
        "rising_bubble" => rising_bubble(),
        "wall_with_holes" => wall_with_holes(),
        "moving_platform" => moving_platform(),
        "water_cooler_2d" => water_cooler(),
        "surface_tension_square" => surface_tension_square(),
        _ => {
            return Err(ConfigError::UnknownPreset {
                name: name.to_string(),
                available: PRESET_NAMES.join(", "),
            })
        }
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Closed box, half full, at rest.
fn hydrostatic() -> ScenarioConfig {
    let mut c = base("hydrostatic", 96, 96, 10);
    c.liquid = vec![below(0.5)];
    c
}

/// Air caught under an inverted solid cup in a closed tank.
pub const TRAPPED_PROBE: [f64; 2] = [0.5, 0.42];

fn trapped_bubble() -> ScenarioConfig {
    let mut c = base("trapped_bubble", 96, 96, 100);
    c.solids = vec![
        PrimitiveConfig::boxed([0.30, 0.46], [0.70, 0.50]),
        PrimitiveConfig::boxed([0.30, 0.25], [0.34, 0.50]),
        PrimitiveConfig::boxed([0.66, 0.25], [0.70, 0.50]),
    ];
    c.liquid = vec![
        below(0.75),
        PrimitiveConfig::cut_box([0.34, 0.33], [0.66, 0.47]),
    ];
    c.freesurface_seeds = vec![[0.5, 0.95]];
    c
}

/// Square air pocket released near the bottom of a tall tank.
fn rising_bubble() -> ScenarioConfig {
    let mut c = base("rising_bubble", 96, 192, 100);
    c.liquid = vec![below(1.7), PrimitiveConfig::cut_box([0.4, 0.2], [0.6, 0.4])];
    c.freesurface_seeds = vec![[0.5, 1.95]];
    c
}

/// Wall x-range and hole y-ranges, aligned with cell faces.
pub const WALL_X: [f64; 2] = [46.0 * H, 50.0 * H];
pub const WALL_HOLES: [[f64; 2]; 2] = [[2.0 * H, 6.0 * H], [18.0 * H, 22.0 * H]];
pub const WALL_LIQUID_HEIGHT: f64 = 0.9;

/// Closed tank split by a wall with two rows of holes; liquid on the left,
/// air on the right.
fn wall_with_holes() -> ScenarioConfig {
    let mut c = base("wall_with_holes", 96, 96, 240);
    c.solids = vec![PrimitiveConfig::boxed([WALL_X[0], -1.0], [WALL_X[1], 2.0])];
    for hole in WALL_HOLES {
        c.solids.push(PrimitiveConfig::cut_box(
            [WALL_X[0] - 0.05, hole[0]],
            [WALL_X[1] + 0.05, hole[1]],
        ));
    }
    c.liquid = vec![PrimitiveConfig::boxed(
        [-1.0, -1.0],
        [WALL_X[0], WALL_LIQUID_HEIGHT],
    )];
    c.freesurface_seeds = vec![[0.2, 0.97]];
    c
}

/// Platform speed and the time it stops.
pub const PLATFORM_SPEED: f64 = 0.1;
pub const PLATFORM_STOP: f64 = 1.2;
/// Left chamber spans `[0, PLATFORM_CHAMBER]`, a whole number of cells.
pub const PLATFORM_CHAMBER: f64 = 36.0 * H;

/// A platform descends in the sealed left chamber and pushes the trapped
/// air against the liquid, which rises in the right chamber.
fn moving_platform() -> ScenarioConfig {
    let mut c = base("moving_platform", 96, 96, 60);
    c.solids = vec![
        PrimitiveConfig::boxed([-0.05, 0.75], [PLATFORM_CHAMBER + 2.0 * H, 0.80]).with_motion(
            vec![
                MotionConfig {
                    start: 0.0,
                    velocity: [0.0, -PLATFORM_SPEED],
                },
                MotionConfig {
                    start: PLATFORM_STOP,
                    velocity: [0.0, 0.0],
                },
            ],
        ),
        PrimitiveConfig::boxed([PLATFORM_CHAMBER, 0.25], [PLATFORM_CHAMBER + 4.0 * H, 1.1]),
    ];
    c.liquid = vec![below(0.45)];
    c.freesurface_seeds = vec![[0.75, 0.9]];
    c
}

/// An inverted bottle drains through a narrow neck into a basin; the sealed
/// air at the top of the bottle holds the liquid back.
fn water_cooler() -> ScenarioConfig {
    let mut c = base("water_cooler_2d", 96, 96, 100);
    c.solids = vec![
        PrimitiveConfig::boxed([-0.1, 43.0 * H], [1.1, 1.1]),
        PrimitiveConfig::cut_box([0.25, 0.55], [0.75, 0.95]),
        PrimitiveConfig::cut_box([43.0 * H, 0.40], [53.0 * H, 0.60]),
    ];
    c.liquid = vec![PrimitiveConfig::boxed([0.2, 0.4], [0.8, 0.88]), below(0.1)];
    c.freesurface_seeds = vec![[0.1, 0.3]];
    c
}

/// Square air pocket inside a liquid disk without gravity.
pub const SQUARE_CENTER: [f64; 2] = [0.5, 0.5];

fn surface_tension_square() -> ScenarioConfig {
    let mut c = base("surface_tension_square", 96, 96, 300);
    c.physics.gravity = [0.0, 0.0];
    c.physics.sigma = 2.0;
    c.physics.max_substeps = 20;
    c.liquid = vec![
        PrimitiveConfig::circle(SQUARE_CENTER, 0.35),
        PrimitiveConfig::cut_box([0.38, 0.38], [0.62, 0.62]),
    ];
    c.freesurface_seeds = vec![[0.03, 0.03]];
    c
}
