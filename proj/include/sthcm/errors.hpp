#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sthcm {

// Every failure raised by the toolkit derives from Error, so callers at the
// process boundary can catch one type and map it to an exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---- ingestion -------------------------------------------------------------

class MissingCell : public Error {
 public:
  MissingCell(std::size_t unit, std::size_t subunit, std::size_t t)
      : Error("missing panel cell (unit=" + std::to_string(unit) +
              ", subunit=" + std::to_string(subunit) + ", t=" + std::to_string(t) + ")"),
        unit(unit), subunit(subunit), t(t) {}
  std::size_t unit, subunit, t;
};

class MalformedRow : public Error {
 public:
  MalformedRow(std::size_t line, const std::string& why)
      : Error("malformed row at line " + std::to_string(line) + ": " + why), line(line) {}
  std::size_t line;
};

class NonBinaryTreatment : public Error {
 public:
  explicit NonBinaryTreatment(std::size_t line)
      : Error("treatment is not 0 or 1 at line " + std::to_string(line)), line(line) {}
  std::size_t line;
};

class SelfLoop : public Error {
 public:
  explicit SelfLoop(std::size_t unit)
      : Error("self loop on unit " + std::to_string(unit)), unit(unit) {}
  std::size_t unit;
};

class IndexOutOfRange : public Error {
 public:
  IndexOutOfRange(long long index, std::size_t n_units)
      : Error("unit index " + std::to_string(index) + " outside [0, " +
              std::to_string(n_units) + ")") {}
};

class ParseError : public Error {
 public:
  using Error::Error;
};

// Names the offending field so the CLI can report it verbatim.
class InvalidConfig : public Error {
 public:
  InvalidConfig(std::string field_name, const std::string& why)
      : Error("invalid config field '" + field_name + "': " + why), field(std::move(field_name)) {}
  std::string field;
};

// ---- estimation ------------------------------------------------------------

class TooShortPanel : public Error {
 public:
  explicit TooShortPanel(std::size_t t_steps)
      : Error("panel has " + std::to_string(t_steps) +
              " time step(s); lagged features need at least 2") {}
};

class RankDeficient : public Error {
 public:
  RankDeficient(std::size_t column_index, std::string column_name)
      : Error("design matrix is rank deficient: column '" + column_name +
              "' is linearly dependent on earlier columns"),
        column(column_index), name(std::move(column_name)) {}
  std::size_t column;
  std::string name;
};

class TooFewRows : public Error {
 public:
  TooFewRows(std::size_t rows, std::size_t needed)
      : Error("need at least " + std::to_string(needed) + " rows, got " + std::to_string(rows)) {}
};

class MissingUnitModel : public Error {
 public:
  explicit MissingUnitModel(std::size_t unit)
      : Error("no fitted model covers unit " + std::to_string(unit)) {}
};

class HorizonOutOfRange : public Error {
 public:
  HorizonOutOfRange(std::size_t horizon, std::size_t t_steps)
      : Error("horizon " + std::to_string(horizon) + " outside [1, " +
              std::to_string(t_steps) + "]") {}
};

class StateSpaceTooLarge : public Error {
 public:
  using Error::Error;
};

}  // namespace sthcm
