//
// Project QEqNet - Copyright 2026 QEqNet Developers.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef QEQNET_ERRORS_HPP_
#define QEQNET_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace qeqnet {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file. line() is 1-based; 0 when no line applies.
class ParseError : public Error {
public:
  ParseError(const std::string &msg, int line = 0)
      : Error(line > 0 ? msg + " (line " + std::to_string(line) + ")" : msg),
        line_(line) {}
  int line() const { return line_; }

private:
  int line_;
};

class UnsupportedElement : public Error {
public:
  explicit UnsupportedElement(const std::string &symbol)
      : Error("unsupported element: " + symbol), symbol_(symbol) {}
  const std::string &symbol() const { return symbol_; }

private:
  std::string symbol_;
};

/// Bond graph has more than one connected component.
class MultiFragmentError : public Error {
public:
  using Error::Error;
};

class PerceptionError : public Error {
public:
  PerceptionError(const std::string &msg, int atom_index)
      : Error(msg + " (atom " + std::to_string(atom_index) + ")"),
        atom_index_(atom_index) {}
  int atom_index() const { return atom_index_; }

private:
  int atom_index_;
};

class InvalidArgument : public Error {
public:
  using Error::Error;
};

/// Charge equilibration denominator too close to zero.
/// atom_index() is the offending atom, or -1 for the global 1/s sum.
class SingularHardness : public Error {
public:
  SingularHardness(const std::string &msg, int atom_index)
      : Error(atom_index >= 0 ? msg + " (atom " + std::to_string(atom_index) + ")" : msg),
        atom_index_(atom_index) {}
  int atom_index() const { return atom_index_; }

private:
  int atom_index_;
};

class OracleDomainError : public Error {
public:
  using Error::Error;
};

/// Model weights incompatible with the featurizer or the requested graph.
class ModelMismatch : public Error {
public:
  using Error::Error;
};

class VersionError : public Error {
public:
  using Error::Error;
};

class TruncationError : public Error {
public:
  using Error::Error;
};

/// Electrostatic potential requested at (or too close to) an atom center.
class SingularPoint : public Error {
public:
  using Error::Error;
};

} // namespace qeqnet

#endif // QEQNET_ERRORS_HPP_
