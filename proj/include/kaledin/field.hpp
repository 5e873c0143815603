#pragma once
// Exact scalar arithmetic: arbitrary-precision rationals and odd prime
// fields. Every algebraic routine in this library is parametrized by a
// field handle providing an element type plus closed exact operations;
// no floating point appears anywhere.

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace kaledin {

using BigInt = boost::multiprecision::cpp_int;
using BigRat = boost::multiprecision::cpp_rational;

struct FieldError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/* Field of rational numbers. */
struct Rationals {
  using Elem = BigRat;

  long long characteristic() const { return 0; }

  Elem zero() const { return Elem(0); }
  Elem one() const { return Elem(1); }
  Elem from_int(long long n) const { return Elem(n); }

  Elem from_fraction(const BigInt& num, const BigInt& den) const {
    if (den == 0) throw FieldError("zero denominator in rational literal");
    // The backend requires a positive denominator; move the sign up.
    return den < 0 ? Elem(-num, -den) : Elem(num, den);
  }

  Elem add(const Elem& a, const Elem& b) const { return a + b; }
  Elem sub(const Elem& a, const Elem& b) const { return a - b; }
  Elem neg(const Elem& a) const { return -a; }
  Elem mul(const Elem& a, const Elem& b) const { return a * b; }

  Elem inv(const Elem& a) const {
    if (a == 0) throw FieldError("division by zero");
    return Elem(1) / a;
  }
  Elem div(const Elem& a, const Elem& b) const { return mul(a, inv(b)); }

  bool is_zero(const Elem& a) const { return a == 0; }
  bool eq(const Elem& a, const Elem& b) const { return a == b; }

  std::string to_string(const Elem& a) const { return a.str(); }

  BigInt numerator_of(const Elem& a) const { return boost::multiprecision::numerator(a); }
  BigInt denominator_of(const Elem& a) const { return boost::multiprecision::denominator(a); }
};

/* Prime field F_p for an odd prime p (p = 2 is accepted by the arithmetic
   itself; individual operations that divide by 2 gate on it). Elements are
   canonical residues in [0, p). */
struct PrimeField {
  using Elem = std::uint64_t;

  std::uint64_t p;

  explicit PrimeField(std::uint64_t prime) : p(prime) {
    if (p < 2 || p > (1ull << 31)) throw FieldError("modulus out of range");
    for (std::uint64_t d = 2; d * d <= p; ++d)
      if (p % d == 0) throw FieldError("modulus " + std::to_string(p) + " is not prime");
  }

  long long characteristic() const { return static_cast<long long>(p); }

  Elem zero() const { return 0; }
  Elem one() const { return 1 % p; }

  Elem from_int(long long n) const {
    long long r = n % static_cast<long long>(p);
    if (r < 0) r += static_cast<long long>(p);
    return static_cast<Elem>(r);
  }

  Elem from_fraction(const BigInt& num, const BigInt& den) const {
    BigInt pn(p);
    BigInt n = num % pn;
    if (n < 0) n += pn;
    BigInt d = den % pn;
    if (d < 0) d += pn;
    Elem dn = d.convert_to<Elem>();
    if (dn == 0) throw FieldError("denominator vanishes mod " + std::to_string(p));
    return mul(n.convert_to<Elem>(), inv(dn));
  }

  Elem add(Elem a, Elem b) const {
    Elem s = a + b;
    return s >= p ? s - p : s;
  }
  Elem sub(Elem a, Elem b) const { return a >= b ? a - b : a + p - b; }
  Elem neg(Elem a) const { return a == 0 ? 0 : p - a; }
  Elem mul(Elem a, Elem b) const { return (a * b) % p; }

  Elem inv(Elem a) const {
    if (a == 0) throw FieldError("division by zero");
    // Fermat: a^(p-2) mod p.
    Elem r = 1, base = a;
    std::uint64_t e = p - 2;
    while (e) {
      if (e & 1) r = mul(r, base);
      base = mul(base, base);
      e >>= 1;
    }
    return r;
  }
  Elem div(Elem a, Elem b) const { return mul(a, inv(b)); }

  bool is_zero(Elem a) const { return a == 0; }
  bool eq(Elem a, Elem b) const { return a == b; }

  std::string to_string(Elem a) const { return std::to_string(a); }
};

/* k! is a unit unless the characteristic p satisfies 0 < p <= k. */
template <class F>
bool factorial_invertible_up_to(const F& field, long long k) {
  long long p = field.characteristic();
  return p == 0 || p > k;
}

/* First k whose factorial fails to be invertible (the characteristic). */
template <class F>
long long first_noninvertible_factorial(const F& field) {
  return field.characteristic();
}

/* Error text used by every factorial gate; names the offending factorial. */
template <class F>
void require_factorials_up_to(const F& field, long long k, const std::string& op) {
  if (!factorial_invertible_up_to(field, k)) {
    long long bad = first_noninvertible_factorial(field);
    throw FieldError(op + " requires invertible factorials up to " + std::to_string(k) +
                     "!: " + std::to_string(bad) + "! is not invertible in characteristic " +
                     std::to_string(bad));
  }
}

}  // namespace kaledin
