pub mod accuracy;
pub mod calibrate;
pub mod evaluate;
pub mod kernel;
pub mod lbs;
pub mod sample;
pub mod verify;
