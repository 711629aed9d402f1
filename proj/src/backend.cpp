#include "pimns/backend.hpp"

#include "pimns/errors.hpp"

namespace pimns {

InternalBackend::InternalBackend(std::shared_ptr<const ModelBundle> bundle) : bundle_(std::move(bundle)) {
  if (!bundle_) throw ArgumentError("internal backend needs a model bundle");
}

Completion InternalBackend::complete(std::string_view prompt, const GenerationParams& params, ProbeSink* sink) const {
  if (prompt.empty()) throw ArgumentError("prompt must not be empty");
  GenerationResult r = generate(*bundle_, prompt, params, sink);
  return {std::move(r.text), r.generated_ids.size()};
}

std::string InternalBackend::describe() const { return "internal:" + config_hash(bundle_->config()); }

std::string complete(const Backend& backend, std::string_view prompt, const GenerationParams& params) {
  return backend.complete(prompt, params, nullptr).text;
}

}  // namespace pimns
