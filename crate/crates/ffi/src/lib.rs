//! C ABI for the detwave toolkit.
//!
//! The exported surface lands together with the library modules it wraps.
