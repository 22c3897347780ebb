#include "hydrodiff/models/params.hpp"

#include "hydrodiff/core/errors.hpp"

namespace hydrodiff::models {

core::Arr& ParamStore::add(const std::string& name, core::Arr init) {
    if (index_.count(name)) throw ArgumentError("ParamStore: duplicate parameter '" + name + "'");
    index_[name] = entries_.size();
    entries_.push_back({name, std::move(init)});
    return entries_.back().value;
}

core::Arr& ParamStore::operator[](const std::string& name) {
    return entries_[static_cast<std::size_t>(index_of(name))].value;
}

const core::Arr& ParamStore::at(const std::string& name) const {
    return entries_[static_cast<std::size_t>(index_of(name))].value;
}

bool ParamStore::has(const std::string& name) const { return index_.count(name) > 0; }

Eigen::Index ParamStore::index_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ArgumentError("ParamStore: unknown parameter '" + name + "'");
    return static_cast<Eigen::Index>(it->second);
}

Eigen::Index ParamStore::total_size() const {
    Eigen::Index n = 0;
    for (const auto& e : entries_) n += e.value.size();
    return n;
}

Eigen::VectorXd ParamStore::flatten() const {
    Eigen::VectorXd out(total_size());
    Eigen::Index off = 0;
    for (const auto& e : entries_) {
        out.segment(off, e.value.size()) =
            Eigen::Map<const Eigen::VectorXd>(e.value.data(), e.value.size());
        off += e.value.size();
    }
    return out;
}

void ParamStore::unflatten(const Eigen::Ref<const Eigen::VectorXd>& theta) {
    if (theta.size() != total_size()) throw ArgumentError("ParamStore::unflatten: size mismatch");
    Eigen::Index off = 0;
    for (auto& e : entries_) {
        Eigen::Map<Eigen::VectorXd>(e.value.data(), e.value.size()) =
            theta.segment(off, e.value.size());
        off += e.value.size();
    }
}

BoundParams bind_params(core::Tape& tape, const ParamStore& store, bool as_leaves) {
    BoundParams bp;
    bp.store = &store;
    bp.vars.reserve(store.count());
    for (const auto& e : store.entries())
        bp.vars.push_back(as_leaves ? tape.leaf(e.value) : tape.constant(e.value));
    return bp;
}

}  // namespace hydrodiff::models
