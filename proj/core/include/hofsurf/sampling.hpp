#pragma once

#include "hofsurf/geometry.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace hofsurf {

// Mixes a base seed with a stream number (iteration, object id...) into an
// independent seed. SplitMix64 finalizer.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

// n i.i.d. uniform points on the unit sphere, drawn as normalized Gaussian
// triples. Sample i depends only on (seed, i), so a smaller draw with the
// same seed is a prefix of a larger one.
std::vector<Vec3> sample_sphere_uniform(std::size_t n, std::uint64_t seed);

// [n x 3] tensor of sphere samples.
Tensor sphere_samples_tensor(const std::vector<Vec3>& samples);

// Area-weighted uniform surface samples. Each point carries the unit normal
// of the face it was drawn from. Prefix-stable in n like the sphere sampler.
// `face_ids`, when given, receives the source face of every sample.
OrientedPointCloud sample_mesh_uniform(const TriangleMesh& mesh, std::size_t n,
                                       std::uint64_t seed,
                                       std::vector<std::size_t>* face_ids = nullptr);

} // namespace hofsurf
