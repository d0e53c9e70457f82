//! Command-line front end (placeholder while the core library grows).

pub fn run() -> i32 {
    0
}
