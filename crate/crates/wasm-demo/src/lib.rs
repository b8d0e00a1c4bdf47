//! Browser bindings; filled in alongside the static demo page.
