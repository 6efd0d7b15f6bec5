pub mod algebra;
pub mod basecode;
pub mod design1;
pub mod design2;
pub mod design3;
pub mod designs;
pub mod engine;
pub mod error;
pub mod framework;
pub mod golden;
pub mod paritypatch;
pub mod store;

pub use error::{Error, Result};
