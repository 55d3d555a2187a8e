#ifndef CTREE_ERROR_HPP
#define CTREE_ERROR_HPP

#include <stdexcept>
#include <string>

namespace ctree {

/// Malformed or inconsistent input data (files, dimensions, label sets).
class DataError : public std::runtime_error
{
 public:
  using std::runtime_error::runtime_error;
};

/// A model could not be trained or applied (degenerate problems, bad grids).
class TrainingError : public std::runtime_error
{
 public:
  using std::runtime_error::runtime_error;
};

} // namespace ctree

#endif // CTREE_ERROR_HPP
