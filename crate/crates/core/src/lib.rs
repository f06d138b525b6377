pub mod harness;
pub mod morphognostic;
pub mod networks;
pub mod numerics;
pub mod path_composer;
