//! Open-access monitoring over OpenAlex: roster ingestion, name variants,
//! harvesting with record/replay, author disambiguation, corpus depuration,
//! access metrics and a segmented-regression impact estimate.

pub mod corpus;
pub mod disambiguator;
pub mod harvester;
pub mod impact;
pub mod namekit;
pub mod oametrics;
pub mod pipeline;
pub mod records;
pub mod roster;
pub mod testing;
