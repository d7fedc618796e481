#pragma once

#include <stdexcept>
#include <string>

namespace sncert {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller broke a documented precondition (dimension mismatch, wrong mode...).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

// An iterative numeric routine did not converge.
class NumericError : public Error {
 public:
  NumericError(const std::string& what, int iterations, double last_estimate)
      : Error(what), iterations_(iterations), last_estimate_(last_estimate) {}
  explicit NumericError(const std::string& what) : Error(what) {}

  int iterations() const { return iterations_; }
  double last_estimate() const { return last_estimate_; }

 private:
  int iterations_ = 0;
  double last_estimate_ = 0.0;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class NormalizationError : public Error {
 public:
  using Error::Error;
};

class CertificateRejected : public Error {
 public:
  CertificateRejected(const std::string& constraint, double eigenvalue)
      : Error("certificate rejected: " + constraint + " (eigenvalue " +
              std::to_string(eigenvalue) + ")"),
        constraint_(constraint),
        eigenvalue_(eigenvalue) {}

  const std::string& constraint() const { return constraint_; }
  double eigenvalue() const { return eigenvalue_; }

 private:
  std::string constraint_;
  double eigenvalue_;
};

}  // namespace sncert
