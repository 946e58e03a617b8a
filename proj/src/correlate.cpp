#include "pegtransfer/correlate.hpp"

#include <fftw3.h>

#include <algorithm>
#include <complex>
#include <cstring>
#include <cstdint>
#include <list>
#include <memory>
#include <mutex>

#include "pegtransfer/errors.hpp"

namespace pegtransfer {

ActivationMap correlate_direct(const BinaryImage& image, const BinaryImage& mask) {
    ActivationMap out;
    out.width = image.width;
    out.height = image.height;
    out.data.assign(static_cast<std::size_t>(image.width) * static_cast<std::size_t>(image.height), 0.0);
    const int cu = mask.width / 2;
    const int cv = mask.height / 2;
    for (int v = 0; v < image.height; ++v) {
        for (int u = 0; u < image.width; ++u) {
            long sum = 0;
            for (int j = 0; j < mask.height; ++j) {
                const int y = v + j - cv;
                if (y < 0 || y >= image.height) {
                    continue;
                }
                for (int i = 0; i < mask.width; ++i) {
                    const int x = u + i - cu;
                    if (x >= 0 && x < image.width && mask.at(i, j) != 0 && image.at(x, y) != 0) {
                        ++sum;
                    }
                }
            }
            out.data[static_cast<std::size_t>(v) * static_cast<std::size_t>(image.width) + static_cast<std::size_t>(u)] =
                static_cast<double>(sum);
        }
    }
    return out;
}

int fft_friendly_size(int n) {
    for (int m = std::max(n, 1);; ++m) {
        int r = m;
        for (int p : {2, 3, 5, 7}) {
            while (r % p == 0) {
                r /= p;
            }
        }
        if (r == 1) {
            return m;
        }
    }
}

namespace {

constexpr std::size_t kMeasureThreshold = std::size_t{1} << 17;

// The FFTW planner is not thread-safe; execution of distinct plans is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftwDeleter {
    void operator()(void* p) const { fftw_free(p); }
};

template <typename T>
using FftwBuffer = std::unique_ptr<T[], FftwDeleter>;

template <typename T>
FftwBuffer<T> fftw_buffer(std::size_t n) {
    auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * n));
    if (p == nullptr) {
        throw std::bad_alloc();
    }
    return FftwBuffer<T>(p);
}

class Correlator {
public:
    Correlator(const MaskSet& masks, int width, int height)
        : fingerprint_(masks.fingerprint), width_(width), height_(height) {
        const int c = masks.center();
        cols_ = fft_friendly_size(width + c + 1);
        rows_ = fft_friendly_size(height + c + 1);
        half_cols_ = cols_ / 2 + 1;
        const std::size_t real_n = static_cast<std::size_t>(rows_) * static_cast<std::size_t>(cols_);
        const std::size_t spec_n = static_cast<std::size_t>(rows_) * static_cast<std::size_t>(half_cols_);
        real_ = fftw_buffer<double>(real_n);
        spec_ = fftw_buffer<fftw_complex>(spec_n);
        image_spec_ = fftw_buffer<fftw_complex>(spec_n);
        {
            std::lock_guard lock(planner_mutex());
            // Measured plans pay off for the large scan windows; rounding of the
            // integer-valued output hides their different round-off.
            const unsigned flags = real_n >= kMeasureThreshold ? FFTW_MEASURE : FFTW_ESTIMATE;
            forward_ = fftw_plan_dft_r2c_2d(rows_, cols_, real_.get(), spec_.get(), flags);
            inverse_ = fftw_plan_dft_c2r_2d(rows_, cols_, spec_.get(), real_.get(), flags);
        }
        mask_specs_.reserve(masks.count());
        for (const BinaryImage& mask : masks.masks) {
            std::fill(real_.get(), real_.get() + real_n, 0.0);
            for (int j = 0; j < mask.height; ++j) {
                for (int i = 0; i < mask.width; ++i) {
                    real_[static_cast<std::size_t>(j) * static_cast<std::size_t>(cols_) + static_cast<std::size_t>(i)] =
                        mask.at(i, j);
                }
            }
            fftw_execute(forward_);
            FftwBuffer<fftw_complex> s = fftw_buffer<fftw_complex>(spec_n);
            std::memcpy(s.get(), spec_.get(), spec_n * sizeof(fftw_complex));
            mask_specs_.push_back(std::move(s));
        }
        mask_center_ = c;
        // Circular shift that puts the mask centre at the output pixel.
        for (int v = 0; v < height_; ++v) {
            row_index_.push_back(((v - c) % rows_ + rows_) % rows_);
        }
        for (int u = 0; u < width_; ++u) {
            col_index_.push_back(((u - c) % cols_ + cols_) % cols_);
        }
    }

    ~Correlator() {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(forward_);
        fftw_destroy_plan(inverse_);
    }

    Correlator(const Correlator&) = delete;
    Correlator& operator=(const Correlator&) = delete;

    bool matches(const MaskSet& masks, int width, int height) const {
        return masks.fingerprint == fingerprint_ && width == width_ && height == height_;
    }

    std::vector<ActivationMap> run(const BinaryImage& image) {
        const std::size_t real_n = static_cast<std::size_t>(rows_) * static_cast<std::size_t>(cols_);
        const std::size_t spec_n = static_cast<std::size_t>(rows_) * static_cast<std::size_t>(half_cols_);
        std::fill(real_.get(), real_.get() + real_n, 0.0);
        for (int v = 0; v < height_; ++v) {
            for (int u = 0; u < width_; ++u) {
                real_[static_cast<std::size_t>(v) * static_cast<std::size_t>(cols_) + static_cast<std::size_t>(u)] =
                    image.at(u, v);
            }
        }
        fftw_execute(forward_);
        std::memcpy(image_spec_.get(), spec_.get(), spec_n * sizeof(fftw_complex));

        const double scale = 1.0 / static_cast<double>(real_n);
        std::vector<ActivationMap> maps;
        maps.reserve(mask_specs_.size());
        const double* f = &image_spec_[0][0];
        for (const auto& mask_spec : mask_specs_) {
            const double* g = &mask_spec[0][0];
            double* out = &spec_[0][0];
            for (std::size_t t = 0; t < 2 * spec_n; t += 2) {
                // f * conj(g)
                out[t] = f[t] * g[t] + f[t + 1] * g[t + 1];
                out[t + 1] = f[t + 1] * g[t] - f[t] * g[t + 1];
            }
            fftw_execute(inverse_);
            ActivationMap map;
            map.width = width_;
            map.height = height_;
            map.data.resize(static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_));
            double* dst = map.data.data();
            for (int v = 0; v < height_; ++v) {
                const double* src = real_.get() + static_cast<std::size_t>(row_index_[static_cast<std::size_t>(v)]) *
                                                      static_cast<std::size_t>(cols_);
                for (int u = 0; u < width_; ++u) {
                    *dst++ = src[col_index_[static_cast<std::size_t>(u)]] * scale;
                }
            }
            maps.push_back(std::move(map));
        }
        return maps;
    }

private:
    std::uint64_t fingerprint_;
    int width_;
    int height_;
    int rows_ = 0;
    int cols_ = 0;
    int half_cols_ = 0;
    int mask_center_ = 0;
    FftwBuffer<double> real_;
    FftwBuffer<fftw_complex> spec_;
    FftwBuffer<fftw_complex> image_spec_;
    fftw_plan forward_ = nullptr;
    fftw_plan inverse_ = nullptr;
    std::vector<FftwBuffer<fftw_complex>> mask_specs_;
    std::vector<int> row_index_;
    std::vector<int> col_index_;
};

constexpr std::size_t kCachedCorrelators = 4;

Correlator& cached_correlator(const MaskSet& masks, int width, int height) {
    thread_local std::list<std::unique_ptr<Correlator>> cache;
    for (auto it = cache.begin(); it != cache.end(); ++it) {
        if ((*it)->matches(masks, width, height)) {
            cache.splice(cache.begin(), cache, it);
            return *cache.front();
        }
    }
    cache.push_front(std::make_unique<Correlator>(masks, width, height));
    if (cache.size() > kCachedCorrelators) {
        cache.pop_back();
    }
    return *cache.front();
}

}  // namespace

std::vector<ActivationMap> correlate_fft(const BinaryImage& image, const MaskSet& masks) {
    if (masks.count() == 0) {
        throw ConfigError("correlate_fft: empty mask set");
    }
    if (image.width <= 0 || image.height <= 0) {
        return {};
    }
    return cached_correlator(masks, image.width, image.height).run(image);
}

}  // namespace pegtransfer
