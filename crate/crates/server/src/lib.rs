//! Live classroom sessions over HTTP: a class of simulated students advances
//! on a shared clock while an operator sets the requirement level, gives
//! quizzes and is graded.

pub mod api;
pub mod hub;
pub mod session;

pub use api::router;
pub use hub::{Hub, HubError};
pub use session::{ClassConfig, GradeWeights, Session, SessionError, StudentSpec, Update};
