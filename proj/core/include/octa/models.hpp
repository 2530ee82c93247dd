#pragma once

#include <memory>
#include <string>
#include <vector>

#include "octa/image.hpp"
#include "octa/nn.hpp"
#include "octa/rng.hpp"

namespace octa {

enum class Task { segmentation, classification };
Task task_from_name(const std::string& name);
const char* task_name(Task t);

struct ModelSpec {
  Task task = Task::segmentation;
  std::string arch = "tiny_unet";
  std::string encoder;  // optional pretrained-encoder key
  int num_outputs = 1;  // 1 per lesion head, or K classes
  int input_size = 64;
  std::string pretrain_source = "none";  // imagenet | external_checkpoint | none
};

/// Trainable model handle. forward_logits returns raw scores: a 1xHxW map for
/// segmentation (sigmoid applied downstream) or a Kx1x1 vector for
/// classification (softmax applied downstream).
class Model {
 public:
  virtual ~Model() = default;
  const ModelSpec& spec() const { return spec_; }

  virtual nn::Tensor forward_logits(const nn::Tensor& x) = 0;
  /// Accumulate parameter gradients from the gradient w.r.t. the logits.
  virtual void backward(const nn::Tensor& dlogits) = 0;
  virtual std::vector<nn::Param*> params() = 0;
  /// Reinitialize the output head (used when adapting a checkpoint whose head
  /// shape differs, e.g. 5-class fundus grading into a 3-class model).
  virtual void reinit_head(Rng& rng) = 0;

 protected:
  explicit Model(ModelSpec spec) : spec_(std::move(spec)) {}
  ModelSpec spec_;
};

struct ArchInfo {
  std::string key;
  Task task;
  bool native;  // buildable here; false = needs an external backbone provider
};

/// All registered architecture keys, native and external.
const std::vector<ArchInfo>& registered_archs();

/// Build a model. Unknown keys raise an error listing the registry; keys for
/// large published backbones raise an error explaining they are consumed via
/// an external backbone provider, not built here.
std::unique_ptr<Model> build_model(const ModelSpec& spec, uint64_t seed);

// ---- image/tensor adapters and probability heads ----

nn::Tensor to_tensor(const ImageArray& img);
ImageArray to_image(const nn::Tensor& t);
/// Collapse to single channel by averaging; identity for c=1.
ImageArray to_gray(const ImageArray& img);

/// Resize/grayscale to the model's input size, forward, softmax.
std::vector<double> predict_probs(Model& model, const ImageArray& img);

/// Forward and sigmoid, resized back to the source resolution.
ImageArray predict_probmap(Model& model, const ImageArray& img);

}  // namespace octa
