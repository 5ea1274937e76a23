use num_bigint::BigInt;
use num_traits::One;
use num_integer::Integer;
use serde::Serialize;

/// A finite abelian group `ℤ/d₁ ⊕ ℤ/d₂ ⊕ …` with `1 < d₁ | d₂ | …`.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize)]
pub struct FiniteGroupStructure {
    #[serde(serialize_with = "crate::io::ser_int_vec")]
    elementary_divisors: Vec<BigInt>,
    #[serde(serialize_with = "crate::io::ser_int")]
    order: BigInt,
}

impl FiniteGroupStructure {
    /// Panics unless the divisors form a chain of integers greater than one.
    pub fn from_divisors(elementary_divisors: Vec<BigInt>) -> Self {
        assert!(elementary_divisors.iter().all(|d| *d > BigInt::one()), "divisors must exceed 1");
        assert!(
            elementary_divisors.windows(2).all(|w| w[1].is_multiple_of(&w[0])),
            "divisors must form a divisibility chain"
        );
        let order = elementary_divisors.iter().product();
        FiniteGroupStructure { elementary_divisors, order }
    }

    pub fn trivial() -> Self {
        FiniteGroupStructure { elementary_divisors: Vec::new(), order: BigInt::one() }
    }

    pub fn divisors(&self) -> &[BigInt] {
        &self.elementary_divisors
    }

    pub fn order(&self) -> BigInt {
        self.order.clone()
    }

    pub fn is_trivial(&self) -> bool {
        self.elementary_divisors.is_empty()
    }

    pub fn exponent(&self) -> BigInt {
        self.elementary_divisors.last().cloned().unwrap_or_else(BigInt::one)
    }

    /// True when the divisors come in equal adjacent pairs `(d₁,d₁,d₂,d₂,…)`.
    pub fn is_paired(&self) -> bool {
        self.elementary_divisors.len() % 2 == 0
            && self.elementary_divisors.chunks(2).all(|p| p[0] == p[1])
    }
}

impl std::fmt::Display for FiniteGroupStructure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_trivial() {
            return write!(f, "elementary divisors: none; order 1");
        }
        let ds: Vec<String> = self.elementary_divisors.iter().map(ToString::to_string).collect();
        write!(f, "elementary divisors: {}; order {}", ds.join(","), self.order)
    }
}
