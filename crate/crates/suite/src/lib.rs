//! Carrier crate for the `acceptance` test target.
