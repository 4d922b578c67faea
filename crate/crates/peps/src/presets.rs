//! Built-in experiment configs, selected with `--config preset:<name>`.
//!
//! Full presets train at scale (batch 60000, 3000 epochs of 40 batches)
//! and expect user-supplied data at the listed paths. `-desk` variants keep the
//! architecture ratios on generated 64-pixel signals with batch 4096 and
//! 2000 steps.

/// Every preset name.
pub const NAMES: [&str; 12] = [
    "kodak-gppeps",
    "kodak-gppeps-desk",
    "kodak-gppeps-dual",
    "kodak-gppeps-dual-desk",
    "kodak-grid",
    "kodak-grid-desk",
    "ntc-peps",
    "ntc-peps-desk",
    "sdf-grid-peps",
    "sdf-grid-peps-desk",
    "sdf-grid",
    "sdf-grid-desk",
];

const IMAGE_FULL: &str = "[task]
kind = image
signal = kodim01.png

[encoder]
kind = bi_grid
resolution = 192, 128
feat_dim = 17
";

const IMAGE_DESK: &str = "[task]
kind = image
signal = builtin:dead-leaves:64

[encoder]
kind = bi_grid
resolution = 16, 16
feat_dim = 17
";

const PINK: &str = "
[aggregator]
kind = pink
alpha = 1
frequencies = 3
";

const L1_MLP: &str = "
[mlp]
hidden_layers = 3
hidden_width = 64
activation = leaky_relu
slope = 0.01
";

const L1_TRAIN: &str = "loss = l1
lr = 0.01
schedule = constant
";

const DUAL_MLP: &str = "
[mlp]
hidden_layers = 3
hidden_width = 64
activation = gelu
";

const DUAL_TRAIN: &str = "loss = l2
lr = 0.001
grid_lr = 0.1
schedule = cosine
min_factor = 0.01
";

const FULL_STEPS: &str = "batch_size = 60000
epochs = 3000
batches_per_epoch = 40
log_every = 4000
seed = 0
";

const DESK_STEPS: &str = "batch_size = 4096
epochs = 1
batches_per_epoch = 2000
log_every = 250
seed = 0
";

const NTC_FULL: &str = "[task]
kind = texture_set
signal = textures

[encoder]
kind = ntc
image_size = 4096
tiled_frequencies = 3
fine.kind = concat_grid
fine.resolution = 1024, 1024
fine.feat_dim = 12
coarse.kind = bi_grid
coarse.resolution = 512, 512
coarse.feat_dim = 20
";

const NTC_DESK: &str = "[task]
kind = texture_set
signal = builtin:texture-set:64

[encoder]
kind = ntc
image_size = 64
tiled_frequencies = 3
fine.kind = concat_grid
fine.resolution = 16, 16
fine.feat_dim = 12
coarse.kind = bi_grid
coarse.resolution = 8, 8
coarse.feat_dim = 20
";

const CONCAT: &str = "
[aggregator]
kind = concat
frequencies = 3
";

const SDF_FULL: &str = "[task]
kind = sdf
signal = shape.sdfv

[encoder]
kind = ti_grid
resolution = 32, 32, 32
feat_dim = 18
";

const SDF_DESK: &str = "[task]
kind = sdf
signal = builtin:torus:64

[encoder]
kind = ti_grid
resolution = 16, 16, 16
feat_dim = 18
";

const SDF_MLP: &str = "
[mlp]
hidden_layers = 3
hidden_width = 64
activation = silu
";

const SDF_TRAIN: &str = "loss = mape
lr = 0.001
schedule = cosine
min_factor = 0.01
";

/// Config text of a preset.
pub fn preset(name: &str) -> Option<String> {
    let parts: [&str; 5] = match name {
        "kodak-gppeps" => [IMAGE_FULL, PINK, L1_MLP, L1_TRAIN, FULL_STEPS],
        "kodak-gppeps-desk" => [IMAGE_DESK, PINK, L1_MLP, L1_TRAIN, DESK_STEPS],
        "kodak-gppeps-dual" => [IMAGE_FULL, PINK, DUAL_MLP, DUAL_TRAIN, FULL_STEPS],
        "kodak-gppeps-dual-desk" => [IMAGE_DESK, PINK, DUAL_MLP, DUAL_TRAIN, DESK_STEPS],
        "kodak-grid" => [IMAGE_FULL, "", L1_MLP, L1_TRAIN, FULL_STEPS],
        "kodak-grid-desk" => [IMAGE_DESK, "", L1_MLP, L1_TRAIN, DESK_STEPS],
        "ntc-peps" => [NTC_FULL, CONCAT, DUAL_MLP, DUAL_TRAIN, FULL_STEPS],
        "ntc-peps-desk" => [NTC_DESK, CONCAT, DUAL_MLP, DUAL_TRAIN, DESK_STEPS],
        "sdf-grid-peps" => [SDF_FULL, CONCAT, SDF_MLP, SDF_TRAIN, FULL_STEPS],
        "sdf-grid-peps-desk" => [SDF_DESK, CONCAT, SDF_MLP, SDF_TRAIN, DESK_STEPS],
        "sdf-grid" => [SDF_FULL, "", SDF_MLP, SDF_TRAIN, FULL_STEPS],
        "sdf-grid-desk" => [SDF_DESK, "", SDF_MLP, SDF_TRAIN, DESK_STEPS],
        _ => return None,
    };
    let [task, agg, mlp, train, steps] = parts;
    let output = if name == "ntc-peps" { "# three RGB layers; use 3k for k layers\noutput_dim = 9\n" } else { "" };
    Some(format!("# preset {name}\n{task}{agg}{mlp}{output}\n[train]\n{train}{steps}"))
}
