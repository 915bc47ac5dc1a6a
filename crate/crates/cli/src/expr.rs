//! Scalar expressions for custom N-functions and Kirchhoff functions.
//!
//! Variables are `s`, `x`, `y` and the constant `pi`; functions are the
//! evalexpr builtins (`math::ln`, `math::pow`, ...). Write float literals
//! (`2.0`, not `2`): evalexpr keeps integer arithmetic exact.

use evalexpr::{
    build_operator_tree, Context, DefaultNumericTypes, EvalexprError, EvalexprResult, Node,
    Value,
};

type V = Value<DefaultNumericTypes>;

pub struct Expr {
    source: String,
    node: Node<DefaultNumericTypes>,
    uses_position: bool,
}

struct Vars {
    s: V,
    x: V,
    y: V,
    pi: V,
}

impl Context for Vars {
    type NumericTypes = DefaultNumericTypes;

    fn get_value(&self, identifier: &str) -> Option<&V> {
        match identifier {
            "s" => Some(&self.s),
            "x" => Some(&self.x),
            "y" => Some(&self.y),
            "pi" => Some(&self.pi),
            _ => None,
        }
    }

    fn call_function(&self, identifier: &str, _argument: &V) -> EvalexprResult<V, DefaultNumericTypes> {
        Err(EvalexprError::FunctionIdentifierNotFound(identifier.to_string()))
    }

    fn are_builtin_functions_disabled(&self) -> bool {
        false
    }

    fn set_builtin_functions_disabled(&mut self, disabled: bool) -> EvalexprResult<(), DefaultNumericTypes> {
        if disabled {
            Err(EvalexprError::BuiltinFunctionsCannotBeDisabled)
        } else {
            Ok(())
        }
    }
}

impl Expr {
    /// Parses `source`, accepting only the listed variables (plus `pi`).
    pub fn parse(source: &str, variables: &[&str]) -> Result<Self, String> {
        let node = build_operator_tree::<DefaultNumericTypes>(source).map_err(|e| format!("`{source}`: {e}"))?;
        for v in node.iter_variable_identifiers() {
            if v != "pi" && !variables.contains(&v) {
                return Err(format!(
                    "`{source}`: unknown variable `{v}` (allowed: {}, pi)",
                    variables.join(", ")
                ));
            }
        }
        let uses_position = node.iter_variable_identifiers().any(|v| v == "x" || v == "y");
        let e = Self {
            source: source.to_string(),
            node,
            uses_position,
        };
        // catches type errors such as boolean results up front
        e.try_eval(1.0, [0.5, 0.5])?;
        Ok(e)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn uses_position(&self) -> bool {
        self.uses_position
    }

    fn try_eval(&self, s: f64, x: [f64; 2]) -> Result<f64, String> {
        let vars = Vars {
            s: Value::Float(s),
            x: Value::Float(x[0]),
            y: Value::Float(x[1]),
            pi: Value::Float(std::f64::consts::PI),
        };
        self.node
            .eval_number_with_context(&vars)
            .map_err(|e| format!("`{}`: {e}", self.source))
    }

    /// Evaluation errors become NaN, which the core rejects with a located
    /// diagnostic.
    pub fn eval(&self, s: f64, x: [f64; 2]) -> f64 {
        self.try_eval(s, x).unwrap_or(f64::NAN)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluates_with_builtins() {
        let e = Expr::parse("s^2.0 * math::ln(2.718281828459045 + s) + x", &["s", "x", "y"]).unwrap();
        assert!(e.uses_position());
        let v = e.eval(1.0, [0.25, 0.0]);
        assert!((v - (1.0f64.exp() + 1.0).ln() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn rejects_unknown_variables() {
        let err = Expr::parse("s + z", &["s"]).err().unwrap();
        assert!(err.contains("`z`"), "{err}");
        assert!(Expr::parse("s +", &["s"]).is_err());
    }
}
