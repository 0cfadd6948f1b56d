#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace conformal {

enum class Task { classification, regression };

/// One labeled example. `label` is a dense interned id for classification;
/// `target` carries the real-valued response for regression.
struct Example {
    std::vector<double> object;
    int label = -1;
    double target = 0.0;
};

/// An ordered training set with a fixed feature dimension. Classification
/// labels are interned to dense ids [0, label_count); regression datasets
/// keep real targets and an empty alphabet. Indices are stable: example i
/// stays example i, which the leave-one-out machinery relies on.
class Dataset {
public:
    Dataset() = default;
    Dataset(Task task, std::size_t dim) : task_(task), dim_(dim) {}

    Task task() const { return task_; }
    std::size_t dim() const { return dim_; }
    std::size_t size() const { return dim_ == 0 ? 0 : features_.size() / dim_; }

    std::span<const double> object(std::size_t i) const {
        return {features_.data() + i * dim_, dim_};
    }
    int label(std::size_t i) const { return labels_[i]; }
    double target(std::size_t i) const { return targets_[i]; }

    std::size_t label_count() const { return label_names_.size(); }
    const std::vector<std::string>& label_names() const { return label_names_; }
    const std::string& label_name(int id) const { return label_names_[static_cast<std::size_t>(id)]; }

    /// Returns the dense id for `name`, interning it on first appearance.
    int intern_label(const std::string& name) {
        for (std::size_t i = 0; i < label_names_.size(); ++i)
            if (label_names_[i] == name) return static_cast<int>(i);
        label_names_.push_back(name);
        return static_cast<int>(label_names_.size() - 1);
    }

    /// Returns the id for `name` or -1 when it is not in the alphabet.
    int find_label(const std::string& name) const {
        for (std::size_t i = 0; i < label_names_.size(); ++i)
            if (label_names_[i] == name) return static_cast<int>(i);
        return -1;
    }

    void set_label_names(std::vector<std::string> names) { label_names_ = std::move(names); }

    void add_classified(std::span<const double> object, int label) {
        check_dim(object.size());
        features_.insert(features_.end(), object.begin(), object.end());
        labels_.push_back(label);
    }

    void add_regression(std::span<const double> object, double target) {
        check_dim(object.size());
        features_.insert(features_.end(), object.begin(), object.end());
        targets_.push_back(target);
    }

    void add(const Example& e) {
        if (task_ == Task::classification)
            add_classified(e.object, e.label);
        else
            add_regression(e.object, e.target);
    }

    Example example(std::size_t i) const {
        Example e;
        auto o = object(i);
        e.object.assign(o.begin(), o.end());
        if (task_ == Task::classification)
            e.label = label(i);
        else
            e.target = target(i);
        return e;
    }

    /// Copy of examples [from, to).
    Dataset slice(std::size_t from, std::size_t to) const {
        Dataset out(task_, dim_);
        out.label_names_ = label_names_;
        out.features_.assign(features_.begin() + static_cast<std::ptrdiff_t>(from * dim_),
                             features_.begin() + static_cast<std::ptrdiff_t>(to * dim_));
        if (task_ == Task::classification)
            out.labels_.assign(labels_.begin() + static_cast<std::ptrdiff_t>(from),
                               labels_.begin() + static_cast<std::ptrdiff_t>(to));
        else
            out.targets_.assign(targets_.begin() + static_cast<std::ptrdiff_t>(from),
                                targets_.begin() + static_cast<std::ptrdiff_t>(to));
        return out;
    }

    /// Copy of the first `t` examples (ICP proper training set).
    Dataset prefix(std::size_t t) const { return slice(0, t); }

private:
    void check_dim(std::size_t got) const {
        if (got != dim_)
            throw std::invalid_argument("example dimension " + std::to_string(got) +
                                        " does not match dataset dimension " + std::to_string(dim_));
    }

    Task task_ = Task::classification;
    std::size_t dim_ = 0;
    std::vector<double> features_;  // row-major, size() * dim_
    std::vector<int> labels_;
    std::vector<double> targets_;
    std::vector<std::string> label_names_;
};

/// Read-only view of a classification dataset with the leave-one-out edits
/// the CP loop needs: optionally restrict to a prefix, skip one index, and
/// append one extra (object, label) pair.
class SetView {
public:
    explicit SetView(const Dataset& data)
        : data_(&data), limit_(data.size()) {}

    SetView& prefix(std::size_t t) {
        limit_ = t;
        return *this;
    }
    SetView& without(std::size_t i) {
        skip_ = static_cast<std::ptrdiff_t>(i);
        return *this;
    }
    SetView& with(std::span<const double> object, int label) {
        extra_object_ = object;
        extra_label_ = label;
        has_extra_ = true;
        return *this;
    }

    std::size_t size() const {
        std::size_t n = limit_;
        if (skip_ >= 0 && static_cast<std::size_t>(skip_) < limit_) --n;
        if (has_extra_) ++n;
        return n;
    }

    /// Applies f(object, label) to every member.
    template <typename F>
    void for_each(F&& f) const {
        for (std::size_t j = 0; j < limit_; ++j) {
            if (static_cast<std::ptrdiff_t>(j) == skip_) continue;
            f(data_->object(j), data_->label(j));
        }
        if (has_extra_) f(extra_object_, extra_label_);
    }

    std::span<const double> object_at(std::size_t logical) const {
        std::size_t phys = physical(logical);
        return phys == npos ? extra_object_ : data_->object(phys);
    }
    int label_at(std::size_t logical) const {
        std::size_t phys = physical(logical);
        return phys == npos ? extra_label_ : data_->label(phys);
    }

private:
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    std::size_t physical(std::size_t logical) const {
        std::size_t base = limit_ - (skip_ >= 0 && static_cast<std::size_t>(skip_) < limit_ ? 1 : 0);
        if (logical >= base) return npos;  // the extra example
        if (skip_ >= 0 && logical >= static_cast<std::size_t>(skip_)) return logical + 1;
        return logical;
    }

    const Dataset* data_;
    std::size_t limit_;
    std::ptrdiff_t skip_ = -1;
    std::span<const double> extra_object_;
    int extra_label_ = -1;
    bool has_extra_ = false;
};

}  // namespace conformal
