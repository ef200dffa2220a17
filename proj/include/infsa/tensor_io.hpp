#ifndef INFSA_TENSOR_IO_HPP_
#define INFSA_TENSOR_IO_HPP_

#include <string>
#include <variant>

#include <infsa/matrix.hpp>

namespace infsa {

/**
 * Binary tensor file: magic "INFT", u32 version (= 1), u32 ndim (1 or 2),
 * ndim x u64 dims, then row-major 64-bit float payload. All integers and
 * floats are little-endian. Round-trips are bit-exact for every double,
 * signed zeros included.
 */
using LoadedTensor = std::variant<Vector, Matrix>;

void storeTensor(const std::string &path, const Matrix &m);
void storeTensor(const std::string &path, const Vector &v);

/// Throws FormatError (with the byte offset of the problem) on bad magic,
/// unsupported version, bad rank, or a truncated payload.
LoadedTensor loadTensor(const std::string &path);

/// loadTensor, requiring a 2-d tensor.
Matrix loadMatrix(const std::string &path);

/// loadTensor, requiring a 1-d tensor.
Vector loadVector(const std::string &path);

} // namespace infsa

#endif // INFSA_TENSOR_IO_HPP_
