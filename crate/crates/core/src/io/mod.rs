//! Trace files and plots.

mod csv;
mod svg;

pub use self::csv::{
    read_trace_csv, render_trace_csv, write_trace_csv, CLASSICAL_HEADER, PHOTON_HEADER,
};
pub use self::svg::{emit_plot_svg, render_plot_svg, PlotOptions, PlotSeries, YAxis};
