#ifndef GOSSIPEG_ERROR_HPP_
#define GOSSIPEG_ERROR_HPP_

#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>

namespace gossipeg {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Thrown when an iterate becomes non-finite or exceeds the divergence guard.
class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t iteration, std::size_t machine, double magnitude)
      : Error(describe(iteration, machine, magnitude)),
        iteration_(iteration),
        machine_(machine),
        magnitude_(magnitude) {}

  std::size_t iteration() const noexcept { return iteration_; }
  std::size_t machine() const noexcept { return machine_; }
  double magnitude() const noexcept { return magnitude_; }

 private:
  static std::string describe(std::size_t k, std::size_t m, double mag) {
    std::ostringstream os;
    os << "iterate diverged at iteration " << k << " on machine " << m
       << " (|entry| = " << mag << ")";
    return os.str();
  }

  std::size_t iteration_;
  std::size_t machine_;
  double magnitude_;
};

namespace detail {

inline void require(bool cond, const std::string& what) {
  if (!cond) throw InvalidArgument(what);
}

}  // namespace detail

}  // namespace gossipeg

#endif  // GOSSIPEG_ERROR_HPP_
