#pragma once

#include <stdexcept>
#include <string>

namespace auvox {

// Error taxonomy. The category maps 1:1 onto the CLI exit codes:
// Usage -> 1, Data -> 2, Numerical -> 3.
class Error : public std::runtime_error {
 public:
  enum class Category { Usage, Data, Numerical };

  Error(Category cat, const std::string& msg) : std::runtime_error(msg), cat_(cat) {}
  Category category() const { return cat_; }

 private:
  Category cat_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& msg) : Error(Category::Usage, msg) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& msg) : Error(Category::Data, msg) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& msg) : Error(Category::Numerical, msg) {}
};

#define AUVOX_DATA_ERROR(NAME)                                            \
  class NAME : public DataError {                                         \
   public:                                                                \
    explicit NAME(const std::string& msg) : DataError(msg) {}             \
  }

AUVOX_DATA_ERROR(WrongCountError);        // landmark file line count mismatch
AUVOX_DATA_ERROR(MalformedLineError);     // non-numeric token / wrong field count
AUVOX_DATA_ERROR(NonFiniteError);         // NaN or Inf coordinate
AUVOX_DATA_ERROR(UnknownCellValueError);  // label cell outside {0,1,9}
AUVOX_DATA_ERROR(DuplicateFrameError);
AUVOX_DATA_ERROR(EmptyTableError);
AUVOX_DATA_ERROR(DegenerateAxisError);  // min == max on a normalization axis
AUVOX_DATA_ERROR(InvalidCError);        // grid side < 2
AUVOX_DATA_ERROR(InvalidDescriptorError);
AUVOX_DATA_ERROR(ShapeMismatchError);
AUVOX_DATA_ERROR(MissingCacheError);  // backward without cached forward
AUVOX_DATA_ERROR(BadMagicError);
AUVOX_DATA_ERROR(VersionMismatchError);
AUVOX_DATA_ERROR(TooFewSubjectsError);
AUVOX_DATA_ERROR(TooFewFoldsError);
AUVOX_DATA_ERROR(EmptyAuIntersectionError);
AUVOX_DATA_ERROR(InvalidSpecError);

#undef AUVOX_DATA_ERROR

}  // namespace auvox
