#pragma once

#include <cstddef>
#include <random>
#include <stdexcept>
#include <vector>

namespace dualsys {

/// Fixed-capacity ring of records. Once full, each store overwrites the
/// oldest record. Sampling is uniform with replacement.
template <typename T>
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
        if (capacity == 0) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
        records_.reserve(std::min<std::size_t>(capacity, 4096));
    }

    std::size_t capacity() const { return capacity_; }
    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }

    void store(T record) {
        if (records_.size() < capacity_) {
            records_.push_back(std::move(record));
        } else {
            records_[cursor_] = std::move(record);
        }
        cursor_ = (cursor_ + 1) % capacity_;
    }

    /// i-th record in insertion order, 0 = oldest still present.
    const T& at(std::size_t i) const {
        if (i >= records_.size()) throw std::out_of_range("ReplayBuffer::at");
        const std::size_t start = records_.size() < capacity_ ? 0 : cursor_;
        return records_[(start + i) % capacity_];
    }

    template <typename Urbg>
    std::vector<const T*> sample(std::size_t n, Urbg& rng) const {
        if (records_.empty()) throw std::logic_error("ReplayBuffer: sampling from an empty buffer");
        std::uniform_int_distribution<std::size_t> pick(0, records_.size() - 1);
        std::vector<const T*> out;
        out.reserve(n);
        for (std::size_t i = 0; i < n; ++i) out.push_back(&records_[pick(rng)]);
        return out;
    }

private:
    std::size_t capacity_;
    std::size_t cursor_ = 0;
    std::vector<T> records_;
};

}  // namespace dualsys
