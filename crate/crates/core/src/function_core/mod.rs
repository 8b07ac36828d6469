//! Closed-form functions, their text form, and the sets they are probed on.

pub mod catalogue;
pub mod expr;
pub mod field;
pub mod function;
pub mod sets;

pub use expr::{parse_body, parse_expr, print_body, Expr, Nary, Unary, Var};
pub use field::{sample_window, Field};
pub use function::{make_green_kernel, make_nemytskii, make_tensor_product, FunctionExpr, EPS_LIP};
pub use sets::{near_common_period, BoundedKind, BoundedSetSpec, FamilyKind, GridWindow, ScalarSource, SequenceFamily};
