#pragma once

// Shared vocabulary for the coefficient rings (FourierScalar, EpsSeries,
// TPoly, Matrix) layered on top of a Scalar backend.

#include <concepts>
#include <optional>
#include <string>
#include <type_traits>

#include "fedosov/scalar.hpp"

namespace fedosov {

template <class T>
struct scalar_of {
  using type = typename T::scalar_type;
};

template <class T>
  requires Scalar<T>
struct scalar_of<T> {
  using type = T;
};

template <class T>
using scalar_of_t = typename scalar_of<T>::type;

// Commutative coefficient ring of x-dependent functions: everything the Weyl
// algebra needs from the entries of its End(E)-valued coefficients.
template <class C>
concept CoefficientRing = requires(const C a, const C b, const scalar_of_t<C> s, int i) {
  { a + b } -> std::convertible_to<C>;
  { a - b } -> std::convertible_to<C>;
  { a * b } -> std::convertible_to<C>;
  { a * s } -> std::convertible_to<C>;
  { -a } -> std::convertible_to<C>;
  { a.is_zero() } -> std::convertible_to<bool>;
  { a.conj() } -> std::convertible_to<C>;
  { a.derive(i) } -> std::convertible_to<C>;
  { C::from_scalar(s) } -> std::convertible_to<C>;
  { a == b } -> std::convertible_to<bool>;
};

template <Scalar S>
std::optional<std::string> difference_witness(const S& a, const S& b, double tol = 0.0) {
  if (approx_equal(a, b, tol)) return std::nullopt;
  return a.to_string() + " vs " + b.to_string();
}

template <Scalar S>
double norm_inf(const S& a) {
  return a.abs();
}

}  // namespace fedosov
