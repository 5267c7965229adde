#pragma once

#include <stdexcept>
#include <string>

namespace peelnet {

// Dimension or size mismatch on a linear-algebra / network operation.
class ShapeError : public std::invalid_argument {
  public:
    explicit ShapeError(const std::string& what) : std::invalid_argument(what) {}
};

// Factorization hit a non-positive pivot (matrix not SPD / singular).
class SingularMatrixError : public std::runtime_error {
  public:
    explicit SingularMatrixError(const std::string& what) : std::runtime_error(what) {}
};

// Evidence update produced nu* <= 0 (gamma >= Q): the model has more
// effective parameters than error samples.
class HyperparameterError : public std::runtime_error {
  public:
    explicit HyperparameterError(const std::string& what) : std::runtime_error(what) {}
};

// Dataset ingestion failure; carries row/column location in the message.
class IngestionError : public std::runtime_error {
  public:
    explicit IngestionError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace peelnet
