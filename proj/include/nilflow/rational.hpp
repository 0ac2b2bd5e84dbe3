#pragma once

// Exact rational scalar type. GMP-backed so elimination-heavy exact solves
// never overflow.

#include <gmpxx.h>

#include <stdexcept>
#include <string>

namespace nilflow {

using Rat = mpq_class;

inline Rat rat(long num, long den = 1) {
  if (den == 0) throw std::invalid_argument("rat: zero denominator");
  Rat q(num, den);
  q.canonicalize();
  return q;
}

inline double to_double(const Rat& q) { return q.get_d(); }

inline bool is_integer(const Rat& q) { return q.get_den() == 1; }

// Throws if the reduced numerator/denominator does not fit a signed long.
inline long num_long(const Rat& q) {
  if (!q.get_num().fits_slong_p())
    throw std::overflow_error("rational numerator exceeds machine long");
  return q.get_num().get_si();
}

inline long den_long(const Rat& q) {
  if (!q.get_den().fits_slong_p())
    throw std::overflow_error("rational denominator exceeds machine long");
  return q.get_den().get_si();
}

inline std::string rat_string(const Rat& q) { return q.get_str(); }

}  // namespace nilflow
