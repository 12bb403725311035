#include "lockloop/psd.hpp"

#include <cmath>
#include <stdexcept>

namespace lockloop {

double PsdSegment::eval(double f) const {
    return amplitude_ref * std::pow(f / f_ref, exponent);
}

void PsdSegment::validate() const {
    if (!(f_lo > 0.0) || !(f_hi > f_lo))
        throw std::invalid_argument("PsdSegment: need 0 < f_lo < f_hi");
    if (!(amplitude_ref > 0.0))
        throw std::invalid_argument("PsdSegment: amplitude_ref must be > 0");
    if (f_ref < f_lo || f_ref > f_hi)
        throw std::invalid_argument("PsdSegment: f_ref must lie within [f_lo, f_hi]");
}

bool operator==(const PsdSegment& a, const PsdSegment& b) {
    return a.f_lo == b.f_lo && a.f_hi == b.f_hi && a.exponent == b.exponent &&
           a.amplitude_ref == b.amplitude_ref && a.f_ref == b.f_ref;
}

PsdModel::Eval PsdModel::eval_at(double f) const {
    if (!(f > 0.0)) throw std::domain_error("psd_eval: f must be > 0");
    double density = floor;
    bool covered = floor > 0.0;
    for (const auto& seg : segments) {
        if (seg.covers(f)) {
            density += seg.eval(f);
            covered = true;
        }
    }
    return {density, covered};
}

bool PsdModel::is_zero() const { return segments.empty() && floor == 0.0; }

void PsdModel::validate(bool require_disjoint_segments) const {
    if (floor < 0.0) throw std::invalid_argument("PsdModel: floor must be >= 0");
    for (const auto& seg : segments) seg.validate();
    if (!require_disjoint_segments) return;
    for (std::size_t i = 0; i < segments.size(); ++i)
        for (std::size_t j = i + 1; j < segments.size(); ++j) {
            const auto& a = segments[i];
            const auto& b = segments[j];
            if (a.f_lo < b.f_hi && b.f_lo < a.f_hi)
                throw std::invalid_argument("PsdModel: overlapping segments");
        }
}

PsdModel PsdModel::white(double density) {
    PsdModel m;
    m.floor = density;
    return m;
}

PsdModel compose(std::span<const PsdModel> models) {
    if (models.empty()) throw std::invalid_argument("compose: empty model list");
    PsdModel out;
    for (const auto& m : models) {
        out.segments.insert(out.segments.end(), m.segments.begin(), m.segments.end());
        out.floor += m.floor;
    }
    return out;
}

PsdModel compose(std::initializer_list<PsdModel> models) {
    return compose(std::span<const PsdModel>(models.begin(), models.size()));
}

namespace detail {

std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// xoshiro256++, seeded via splitmix64. Small, fast, and pinned here so the
// byte-identical-output contract does not hang on a library implementation.
GaussianDraw::GaussianDraw(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64(sm);
}

static inline std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

double GaussianDraw::uniform() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    // (0, 1]: never 0 so log() below stays finite
    return (static_cast<double>(result >> 11) + 1.0) * 0x1.0p-53;
}

double GaussianDraw::operator()() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * 3.14159265358979323846 * u2;
    cached_ = r * std::sin(a);
    has_cached_ = true;
    return r * std::cos(a);
}

}  // namespace detail

}  // namespace lockloop
