//! Co-occurrence counts, correspondence analysis and its multiple variant.

mod ca;
mod cooccurrence;
mod mca;

pub use ca::{chi_square_over_n, correspondence_analysis, MapPoint, PerceptualMap};
pub use cooccurrence::{cooccurrence, read_labelled_matrix, CooccurrenceTable, LabelledMatrix};
pub use mca::{eta_squared, indicator_id, mca, variable_axis_correlation, EtaSquared, McaResult};
