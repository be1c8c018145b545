#include "auvox/network.hpp"

#include <algorithm>

#include "json.hpp"

namespace auvox {

std::string variant_name(Variant v) {
  return v == Variant::Binary ? "binary" : "3class";
}

Variant variant_from_name(const std::string& name) {
  if (name == "binary") return Variant::Binary;
  if (name == "3class") return Variant::ThreeClass;
  throw DataError("unknown variant '" + name + "' (expected 'binary' or '3class')");
}

void ArchitectureDescriptor::validate() const {
  if (input_c < 2) throw InvalidDescriptorError("input_c must be >= 2");
  if (au_count < 1) throw InvalidDescriptorError("au_count must be >= 1");
  if (conv_filters.empty()) throw InvalidDescriptorError("at least one conv layer required");
  if (kernel == 0 || kernel % 2 == 0) throw InvalidDescriptorError("kernel must be odd");
  for (std::size_t f : conv_filters)
    if (f == 0) throw InvalidDescriptorError("conv filter count must be >= 1");
  for (std::size_t d : dense)
    if (d == 0) throw InvalidDescriptorError("dense width must be >= 1");
  std::size_t prev = 0;
  bool first = true;
  for (std::size_t p : pool_after) {
    if (p >= conv_filters.size())
      throw InvalidDescriptorError("pool_after index out of range");
    if (!first && p <= prev) throw InvalidDescriptorError("pool_after must be strictly increasing");
    prev = p;
    first = false;
  }
  if (spatial_after_convs() < 1)
    throw InvalidDescriptorError("pooling reduces the spatial size to zero");
}

std::size_t ArchitectureDescriptor::spatial_after_convs() const {
  std::size_t s = input_c;
  for (std::size_t i = 0; i < pool_after.size(); ++i) s /= 2;
  return s;
}

std::size_t ArchitectureDescriptor::flat_features() const {
  const std::size_t s = spatial_after_convs();
  return conv_filters.back() * s * s;
}

ArchitectureDescriptor ArchitectureDescriptor::binary_default() {
  return ArchitectureDescriptor{};
}

ArchitectureDescriptor ArchitectureDescriptor::three_class_default() {
  ArchitectureDescriptor d;
  d.variant = Variant::ThreeClass;
  return d;
}

ArchitectureDescriptor ArchitectureDescriptor::tiny(Variant v) {
  ArchitectureDescriptor d;
  d.variant = v;
  d.input_c = 6;
  d.conv_filters = {3, 4};
  d.kernel = 3;
  d.pool_after = {1};
  d.dense = {10, 6};
  d.au_count = 3;
  return d;
}

std::string descriptor_to_json(const ArchitectureDescriptor& desc) {
  nlohmann::json j;
  j["variant"] = variant_name(desc.variant);
  j["input_c"] = desc.input_c;
  j["conv_filters"] = desc.conv_filters;
  j["kernel"] = desc.kernel;
  j["pool_after"] = desc.pool_after;
  j["dense"] = desc.dense;
  j["au_count"] = desc.au_count;
  return j.dump();
}

ArchitectureDescriptor descriptor_from_json(const std::string& json) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidDescriptorError(std::string("descriptor JSON invalid: ") + e.what());
  }
  ArchitectureDescriptor d;
  try {
    d.variant = variant_from_name(j.at("variant").get<std::string>());
    d.input_c = j.at("input_c").get<std::size_t>();
    d.conv_filters = j.at("conv_filters").get<std::vector<std::size_t>>();
    d.kernel = j.at("kernel").get<std::size_t>();
    d.pool_after = j.at("pool_after").get<std::vector<std::size_t>>();
    d.dense = j.at("dense").get<std::vector<std::size_t>>();
    d.au_count = j.at("au_count").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidDescriptorError(std::string("descriptor JSON missing field: ") + e.what());
  }
  d.validate();
  return d;
}

namespace {

template <typename S>
std::vector<std::unique_ptr<Layer<S>>> build_trunk(const ArchitectureDescriptor& d,
                                                   bool include_dense) {
  std::vector<std::unique_ptr<Layer<S>>> layers;
  std::size_t in_c = d.input_c;
  std::size_t pool_cursor = 0;
  for (std::size_t i = 0; i < d.conv_filters.size(); ++i) {
    layers.push_back(std::make_unique<Conv2d<S>>(in_c, d.conv_filters[i], d.kernel));
    layers.push_back(std::make_unique<Relu<S>>());
    in_c = d.conv_filters[i];
    if (pool_cursor < d.pool_after.size() && d.pool_after[pool_cursor] == i) {
      layers.push_back(std::make_unique<MaxPool2<S>>());
      ++pool_cursor;
    }
  }
  layers.push_back(std::make_unique<Flatten<S>>());
  if (include_dense) {
    std::size_t in = d.flat_features();
    for (std::size_t w : d.dense) {
      layers.push_back(std::make_unique<Dense<S>>(in, w));
      layers.push_back(std::make_unique<Relu<S>>());
      in = w;
    }
  }
  return layers;
}

template <typename S>
std::vector<std::unique_ptr<Layer<S>>> build_head(const ArchitectureDescriptor& d) {
  // Per-AU fully connected stack: dense widths, then a 3-way softmax.
  std::vector<std::unique_ptr<Layer<S>>> layers;
  std::size_t in = d.flat_features();
  for (std::size_t w : d.dense) {
    layers.push_back(std::make_unique<Dense<S>>(in, w));
    layers.push_back(std::make_unique<Relu<S>>());
    in = w;
  }
  layers.push_back(std::make_unique<Dense<S>>(in, 3));
  layers.push_back(std::make_unique<Softmax<S>>());
  return layers;
}

std::string zero_pad2(std::size_t n) {
  std::string s = std::to_string(n);
  return s.size() < 2 ? "0" + s : s;
}

}  // namespace

template <typename S>
Network<S>::Network(ArchitectureDescriptor desc, std::uint64_t seed)
    : desc_(std::move(desc)), seed_(seed) {
  desc_.validate();
  if (desc_.variant == Variant::Binary) {
    trunk_ = build_trunk<S>(desc_, true);
    std::size_t in = desc_.dense.empty() ? desc_.flat_features() : desc_.dense.back();
    trunk_.push_back(std::make_unique<Dense<S>>(in, desc_.au_count));
    trunk_.push_back(std::make_unique<Sigmoid<S>>());
  } else {
    trunk_ = build_trunk<S>(desc_, false);
    for (std::size_t a = 0; a < desc_.au_count; ++a) heads_.push_back(build_head<S>(desc_));
  }
  Rng rng = Rng(seed_).derive("network-init");
  for (auto& layer : trunk_) layer->init_params(rng);
  for (auto& head : heads_)
    for (auto& layer : head) layer->init_params(rng);
}

template <typename S>
Tensor<S> Network<S>::forward(const Tensor<S>& x, bool cache) {
  if (x.rank() != 4 || x.dim(1) != desc_.input_c || x.dim(2) != desc_.input_c ||
      x.dim(3) != desc_.input_c)
    throw ShapeMismatchError("network input must be [B, c, c, c] with c = " +
                             std::to_string(desc_.input_c));
  Tensor<S> h = x;
  for (auto& layer : trunk_) h = layer->forward(h, cache);
  if (desc_.variant == Variant::Binary) {
    has_cache_ = cache;
    cached_batch_ = x.dim(0);
    return h;
  }

  const std::size_t b = x.dim(0);
  Tensor<S> out({b, desc_.au_count, 3});
  for (std::size_t a = 0; a < desc_.au_count; ++a) {
    Tensor<S> ha = h;
    for (auto& layer : heads_[a]) ha = layer->forward(ha, cache);
    for (std::size_t s = 0; s < b; ++s)
      for (std::size_t j = 0; j < 3; ++j) out[(s * desc_.au_count + a) * 3 + j] = ha.at(s, j);
  }
  has_cache_ = cache;
  cached_batch_ = b;
  return out;
}

template <typename S>
void Network<S>::backward(const Tensor<S>& dpred) {
  if (!has_cache_) throw MissingCacheError("Network::backward without cached forward");
  has_cache_ = false;

  if (desc_.variant == Variant::Binary) {
    if (dpred.rank() != 2 || dpred.dim(0) != cached_batch_ || dpred.dim(1) != desc_.au_count)
      throw ShapeMismatchError("binary dpred must be [B, au_count]");
    Tensor<S> g = dpred;
    for (auto it = trunk_.rbegin(); it != trunk_.rend(); ++it) g = (*it)->backward(g);
    return;
  }

  if (dpred.rank() != 3 || dpred.dim(0) != cached_batch_ || dpred.dim(1) != desc_.au_count ||
      dpred.dim(2) != 3)
    throw ShapeMismatchError("3-class dpred must be [B, au_count, 3]");

  const std::size_t b = cached_batch_;
  Tensor<S> dfeat;
  for (std::size_t a = 0; a < desc_.au_count; ++a) {
    Tensor<S> g({b, 3});
    for (std::size_t s = 0; s < b; ++s)
      for (std::size_t j = 0; j < 3; ++j) g.at(s, j) = dpred[(s * desc_.au_count + a) * 3 + j];
    for (auto it = heads_[a].rbegin(); it != heads_[a].rend(); ++it) g = (*it)->backward(g);
    if (dfeat.empty()) {
      dfeat = g;
    } else {
      for (std::size_t i = 0; i < dfeat.size(); ++i) dfeat[i] += g[i];
    }
  }
  for (auto it = trunk_.rbegin(); it != trunk_.rend(); ++it) dfeat = (*it)->backward(dfeat);
}

template <typename S>
std::vector<ParamRef<S>> Network<S>::params() {
  std::vector<ParamRef<S>> out;
  std::size_t conv_i = 0, dense_i = 0;
  for (auto& layer : trunk_) {
    std::vector<ParamRef<S>> here;
    if (dynamic_cast<Conv2d<S>*>(layer.get())) {
      layer->collect_params("conv" + std::to_string(++conv_i), here);
    } else if (dynamic_cast<Dense<S>*>(layer.get())) {
      ++dense_i;
      const bool is_output =
          desc_.variant == Variant::Binary && dense_i == desc_.dense.size() + 1;
      layer->collect_params(is_output ? "output" : "dense" + std::to_string(dense_i), here);
    }
    out.insert(out.end(), here.begin(), here.end());
  }
  for (std::size_t a = 0; a < heads_.size(); ++a) {
    std::size_t hd = 0;
    for (auto& layer : heads_[a]) {
      if (!dynamic_cast<Dense<S>*>(layer.get())) continue;
      ++hd;
      const bool is_output = hd == desc_.dense.size() + 1;
      std::vector<ParamRef<S>> here;
      layer->collect_params(
          "head" + zero_pad2(a) + "." + (is_output ? "output" : "dense" + std::to_string(hd)),
          here);
      out.insert(out.end(), here.begin(), here.end());
    }
  }
  return out;
}

template <typename S>
void Network<S>::zero_grad() {
  for (auto& layer : trunk_) layer->zero_grad();
  for (auto& head : heads_)
    for (auto& layer : head) layer->zero_grad();
}

template <typename S>
void grid_input_slice(const std::vector<std::uint8_t>& occupancy, std::size_t c, S* out) {
  // occupancy linear index (x*c + y)*c + z -> out[(z*c + x)*c + y]
  for (std::size_t x = 0; x < c; ++x)
    for (std::size_t y = 0; y < c; ++y) {
      const std::uint8_t* src = occupancy.data() + (x * c + y) * c;
      for (std::size_t z = 0; z < c; ++z) out[(z * c + x) * c + y] = static_cast<S>(src[z]);
    }
}

template void grid_input_slice<float>(const std::vector<std::uint8_t>&, std::size_t, float*);
template void grid_input_slice<double>(const std::vector<std::uint8_t>&, std::size_t, double*);

template class Network<float>;
template class Network<double>;

}  // namespace auvox
