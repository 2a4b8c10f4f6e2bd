//! Private information retrieval with private side information over
//! partially known message classes.
//!
//! Messages are grouped into classes; a user knows the labels of some
//! messages in the first η ("identifiable") classes and only the number of
//! known messages in the rest. Queries pick one message per class, the
//! server answers with MDS parities of the picked messages, and the user
//! erasure-decodes the message it wants.

pub mod audit;
pub mod exchange;
pub mod field;
pub mod mds;
pub mod query;
pub mod scenario;
