#pragma once

#include <Eigen/Dense>

#include <cstdarg>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace gale {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using IntMatrix = Eigen::MatrixXi;

// Error taxonomy mirrored by the CLI exit codes: input 1, config 2, numeric 3.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class input_error : public error {
 public:
  using error::error;
};

class config_error : public error {
 public:
  using error::error;
};

class numeric_error : public error {
 public:
  using error::error;
};

inline std::string strf(const char* fmt, ...) {
  va_list args;
  va_start(args, fmt);
  va_list copy;
  va_copy(copy, args);
  int len = std::vsnprintf(nullptr, 0, fmt, copy);
  va_end(copy);
  std::string out(static_cast<size_t>(len), '\0');
  std::vsnprintf(out.data(), out.size() + 1, fmt, args);
  va_end(args);
  return out;
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }
inline bool all_finite(const Vector& v) { return v.allFinite(); }

inline void check_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw numeric_error(strf("non-finite values in %s", what));
}

}  // namespace gale
