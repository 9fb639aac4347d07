//! Initial data, configuration files, CSV output and the experiment drivers.

mod config;
mod drivers;
mod initial;
mod io;

pub use config::{parse_config, parse_list, ParseError, RunConfig};
pub use drivers::{
    run_compare, run_sweep, CompareReport, DriverError, FrontSummary, SweepEntry, SweepReport, Verdict,
    COMPARE_BVE_BETA2, DARCY_OVERSHOOT_MAX, DEFAULT_SWEEP, OVERSHOOT_MIN,
};
pub use initial::{decay_profile, slab_profile, InitialCondition};
pub use io::{
    read_snapshot, report_csv, snapshot_csv, snapshot_file_name, write_report, write_snapshot, write_text, IoError,
    REPORT_HEADER,
};
