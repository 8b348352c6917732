//! Trajectory generation, the 80/10/10 split, on-disk formats and input scaling.

mod io;
mod normalize;
mod split;
mod trajectory;

pub use io::{export_csv, load, load_stream, pose_sidecar_path, save, FORMAT_VERSION};
pub use normalize::{
    denormalize_record, normalize, normalize_motor, normalize_record, normalize_sensors, InputRow,
    INPUT_DIMS, MOTOR_DIMS,
};
pub use split::{DatasetSplits, MIN_SPLIT_LEN};
pub use trajectory::{generate, replay, SensorimotorRecord, SensorimotorStream, Trajectory};
