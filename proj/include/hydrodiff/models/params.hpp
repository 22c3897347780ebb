#pragma once

#include <Eigen/Core>
#include <string>
#include <unordered_map>
#include <vector>

#include "hydrodiff/core/tape.hpp"

namespace hydrodiff::models {

/// Ordered, named parameter arrays. Order is registration order and is the
/// canonical order for flattening, optimizer state and checkpoints.
class ParamStore {
public:
    struct Entry {
        std::string name;
        core::Arr value;
    };

    core::Arr& add(const std::string& name, core::Arr init);
    core::Arr& operator[](const std::string& name);
    const core::Arr& at(const std::string& name) const;
    bool has(const std::string& name) const;
    Eigen::Index index_of(const std::string& name) const;

    const std::vector<Entry>& entries() const { return entries_; }
    std::vector<Entry>& entries() { return entries_; }
    std::size_t count() const { return entries_.size(); }

    /// Total number of scalar parameters.
    Eigen::Index total_size() const;

    /// Column-major concatenation of all arrays in registration order.
    Eigen::VectorXd flatten() const;
    void unflatten(const Eigen::Ref<const Eigen::VectorXd>& theta);

private:
    std::vector<Entry> entries_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Tape bindings for every parameter, in store order. Leaves when gradients
/// are wanted, constants for pure evaluation.
struct BoundParams {
    std::vector<core::Var> vars;
    const ParamStore* store = nullptr;

    core::Var at(const std::string& name) const {
        return vars[static_cast<std::size_t>(store->index_of(name))];
    }
};

BoundParams bind_params(core::Tape& tape, const ParamStore& store, bool as_leaves);

}  // namespace hydrodiff::models
