#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "auvox/layers.hpp"
#include "auvox/tensor.hpp"

namespace auvox {

enum class Variant { Binary, ThreeClass };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);

// Shapes for both architectures. The binary stack is
// conv,conv,pool,conv,conv,pool,dense,dense,output with relu between hidden
// layers and a sigmoid output. The 3-class variant shares the conv trunk and
// gives every AU its own fully connected stack ending in a 3-way softmax.
//
// The voxel grid is a cube; the 2D conv stack reads the Z axis as input
// channels of a input_c x input_c image. That mapping lives in
// grid_to_input() and nowhere else.
struct ArchitectureDescriptor {
  Variant variant = Variant::Binary;
  std::size_t input_c = 24;  // grid side; also the conv input channel count
  std::vector<std::size_t> conv_filters = {32, 32, 64, 64};
  std::size_t kernel = 3;
  std::vector<std::size_t> pool_after = {1, 3};  // 2x2 max pool after these conv indices
  std::vector<std::size_t> dense = {256, 128};
  std::size_t au_count = 12;

  void validate() const;                  // throws InvalidDescriptorError
  std::size_t spatial_after_convs() const;
  std::size_t flat_features() const;

  bool operator==(const ArchitectureDescriptor&) const = default;

  static ArchitectureDescriptor binary_default();
  static ArchitectureDescriptor three_class_default();
  // Small variants used by gradient checks and fast tests.
  static ArchitectureDescriptor tiny(Variant v);
};

std::string descriptor_to_json(const ArchitectureDescriptor& desc);
ArchitectureDescriptor descriptor_from_json(const std::string& json);

template <typename S>
class Network {
 public:
  Network(ArchitectureDescriptor desc, std::uint64_t seed);

  const ArchitectureDescriptor& descriptor() const { return desc_; }
  std::uint64_t seed() const { return seed_; }

  // x: [B, input_c, input_c, input_c] (channels = grid Z axis).
  // Binary: returns probabilities [B, au_count]; ThreeClass: [B, au_count, 3].
  Tensor<S> forward(const Tensor<S>& x, bool cache = false);

  // dpred: gradient of the loss wrt forward()'s output. Accumulates
  // parameter gradients from the cached forward.
  void backward(const Tensor<S>& dpred);

  std::vector<ParamRef<S>> params();
  void zero_grad();

 private:
  ArchitectureDescriptor desc_;
  std::uint64_t seed_;
  std::vector<std::unique_ptr<Layer<S>>> trunk_;
  std::vector<std::vector<std::unique_ptr<Layer<S>>>> heads_;  // ThreeClass only
  bool has_cache_ = false;
  std::size_t cached_batch_ = 0;
};

// Expands bit-voxel occupancy into the conv input layout:
// input[b][z][x][y] = grid.at(x, y, z).
template <typename S>
void grid_input_slice(const std::vector<std::uint8_t>& occupancy, std::size_t c, S* out);

extern template class Network<float>;
extern template class Network<double>;

}  // namespace auvox
