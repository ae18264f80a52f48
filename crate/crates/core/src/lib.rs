pub mod cli;
pub mod format;
pub mod interp;
pub mod nonlinearity;
pub mod ode;
pub mod pdesim;
pub mod profiles;
pub mod quadrature;
pub mod radiation;
pub mod verify;
