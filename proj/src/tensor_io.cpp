#include <infsa/tensor_io.hpp>

#include <cstdint>
#include <cstring>
#include <fstream>

namespace infsa {

namespace {

constexpr char kMagic[4] = {'I', 'N', 'F', 'T'};
constexpr std::uint32_t kVersion = 1;

void putU32(std::string &out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
}

void putU64(std::string &out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
}

void putF64(std::string &out, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, sizeof(bits));
    putU64(out, bits);
}

void writeFile(const std::string &path, const std::string &bytes) {
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) {
        throw Error("storeTensor: cannot open '" + path + "' for writing");
    }
    file.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!file) {
        throw Error("storeTensor: write to '" + path + "' failed");
    }
}

class Reader {
public:
    explicit Reader(std::string bytes) : bytes_(std::move(bytes)) {}

    std::size_t offset() const { return offset_; }

    std::uint32_t u32(const char *what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[offset_ + i])) << (8 * i);
        }
        offset_ += 4;
        return v;
    }

    std::uint64_t u64(const char *what) {
        need(8, what);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) {
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[offset_ + i])) << (8 * i);
        }
        offset_ += 8;
        return v;
    }

    double f64(const char *what) {
        const std::uint64_t bits = u64(what);
        double d;
        std::memcpy(&d, &bits, sizeof(d));
        return d;
    }

    void expectMagic() {
        need(4, "magic");
        if (std::memcmp(bytes_.data(), kMagic, 4) != 0) {
            throw FormatError("loadTensor: bad magic, expected 'INFT'", 0);
        }
        offset_ += 4;
    }

    void expectEnd() const {
        if (offset_ != bytes_.size()) {
            throw FormatError("loadTensor: " + std::to_string(bytes_.size() - offset_)
                                  + " trailing bytes after payload",
                              offset_);
        }
    }

private:
    void need(std::size_t count, const char *what) const {
        if (offset_ + count > bytes_.size()) {
            throw FormatError(std::string("loadTensor: truncated while reading ") + what,
                              offset_);
        }
    }

    std::string bytes_;
    std::size_t offset_ = 0;
};

} // namespace

void storeTensor(const std::string &path, const Matrix &m) {
    std::string out;
    out.reserve(4 + 4 + 4 + 16 + 8 * m.data().size());
    out.append(kMagic, 4);
    putU32(out, kVersion);
    putU32(out, 2);
    putU64(out, m.rows());
    putU64(out, m.cols());
    for (double d : m.data()) {
        putF64(out, d);
    }
    writeFile(path, out);
}

void storeTensor(const std::string &path, const Vector &v) {
    std::string out;
    out.reserve(4 + 4 + 4 + 8 + 8 * v.size());
    out.append(kMagic, 4);
    putU32(out, kVersion);
    putU32(out, 1);
    putU64(out, v.size());
    for (double d : v.data()) {
        putF64(out, d);
    }
    writeFile(path, out);
}

LoadedTensor loadTensor(const std::string &path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) {
        throw Error("loadTensor: cannot open '" + path + "'");
    }
    std::string bytes((std::istreambuf_iterator<char>(file)),
                      std::istreambuf_iterator<char>());
    Reader reader(std::move(bytes));

    reader.expectMagic();

    const std::size_t version_offset = reader.offset();
    const std::uint32_t version = reader.u32("version");
    if (version != kVersion) {
        throw FormatError("loadTensor: unsupported version " + std::to_string(version),
                          version_offset);
    }

    const std::size_t ndim_offset = reader.offset();
    const std::uint32_t ndim = reader.u32("rank");
    if (ndim != 1 && ndim != 2) {
        throw FormatError("loadTensor: rank must be 1 or 2, got " + std::to_string(ndim),
                          ndim_offset);
    }

    if (ndim == 1) {
        const std::uint64_t len = reader.u64("length");
        Vector v(static_cast<std::size_t>(len));
        for (std::size_t i = 0; i < len; ++i) {
            v[i] = reader.f64("payload");
        }
        reader.expectEnd();
        return v;
    }

    const std::uint64_t rows = reader.u64("rows");
    const std::uint64_t cols = reader.u64("cols");
    Matrix m(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
    for (std::size_t i = 0; i < m.data().size(); ++i) {
        m.data()[i] = reader.f64("payload");
    }
    reader.expectEnd();
    return m;
}

Matrix loadMatrix(const std::string &path) {
    LoadedTensor t = loadTensor(path);
    if (!std::holds_alternative<Matrix>(t)) {
        throw Error("loadMatrix: '" + path + "' holds a 1-d tensor, expected 2-d");
    }
    return std::get<Matrix>(std::move(t));
}

Vector loadVector(const std::string &path) {
    LoadedTensor t = loadTensor(path);
    if (!std::holds_alternative<Vector>(t)) {
        throw Error("loadVector: '" + path + "' holds a 2-d tensor, expected 1-d");
    }
    return std::get<Vector>(std::move(t));
}

} // namespace infsa
