#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

namespace testutil {

// Solves A x = b by Gaussian elimination with partial pivoting. Small dense
// systems only; used as an independent check against library solvers.
inline std::vector<double> solve_dense(std::vector<std::vector<double>> a,
                                       std::vector<double> b) {
    const size_t n = b.size();
    for (size_t col = 0; col < n; ++col) {
        size_t pivot = col;
        for (size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        for (size_t r = col + 1; r < n; ++r) {
            const double f = a[r][col] / a[col][col];
            for (size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n);
    for (size_t i = n; i-- > 0;) {
        double s = b[i];
        for (size_t c = i + 1; c < n; ++c) s -= a[i][c] * x[c];
        x[i] = s / a[i][i];
    }
    return x;
}

// Least squares via normal equations X'X beta = X'y.
inline std::vector<double> normal_equations(const std::vector<std::vector<double>>& x,
                                            const std::vector<double>& y) {
    const size_t p = x.front().size();
    std::vector<std::vector<double>> xtx(p, std::vector<double>(p, 0.0));
    std::vector<double> xty(p, 0.0);
    for (size_t r = 0; r < x.size(); ++r)
        for (size_t i = 0; i < p; ++i) {
            xty[i] += x[r][i] * y[r];
            for (size_t j = 0; j < p; ++j) xtx[i][j] += x[r][i] * x[r][j];
        }
    return solve_dense(xtx, xty);
}

struct TempDir {
    std::filesystem::path path;

    explicit TempDir(const std::string& stem) {
        path = std::filesystem::temp_directory_path() /
               (stem + "_" + std::to_string(std::random_device{}()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path);
    f << content;
}

inline std::string read_file(const std::string& path) {
    std::ifstream f(path);
    return std::string(std::istreambuf_iterator<char>(f),
                       std::istreambuf_iterator<char>());
}

} // namespace testutil
