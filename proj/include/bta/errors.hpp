#pragma once

#include <stdexcept>
#include <string>

namespace bta {

/// Cholesky hit a non-positive pivot. `block_index` identifies the failing
/// diagonal block in whatever indexing the caller used (stage index for the
/// sequential path, separator/segment info encoded in the message for the
/// parallel path).
class NotPositiveDefiniteError : public std::runtime_error
{
public:
    NotPositiveDefiniteError(const std::string& what, int block_index)
        : std::runtime_error(what), block_index_(block_index)
    {
    }

    int block_index() const { return block_index_; }

private:
    int block_index_;
};

/// Singular triangular factor (zero diagonal entry) in a solve.
class SingularFactorError : public std::runtime_error
{
    using std::runtime_error::runtime_error;
};

/// Block or vector dimensions do not conform.
class DimensionError : public std::invalid_argument
{
    using std::invalid_argument::invalid_argument;
};

/// A partition plan is inconsistent with the stage count or violates N >= 2p.
class PlanError : public std::invalid_argument
{
    using std::invalid_argument::invalid_argument;
};

/// File parsing failure; the message names the offending line or key.
class ParseError : public std::runtime_error
{
    using std::runtime_error::runtime_error;
};

} // namespace bta
