// tensor.hpp
#pragma once

#include <cstddef>
#include <new>
#include <string>
#include <vector>

namespace proxsense::nn {

// Storage aligned to a full cache line. Vectorized kernels peel by address,
// so a fixed base alignment keeps their summation order, and therefore every
// result bit, independent of where the heap places a buffer.
template <class T>
struct AlignedAllocator {
    using value_type = T;
    static constexpr std::align_val_t kAlign{64};

    AlignedAllocator() = default;
    template <class U>
    AlignedAllocator(const AlignedAllocator<U>&) {}

    T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
    void deallocate(T* p, std::size_t) { ::operator delete(p, kAlign); }

    template <class U>
    bool operator==(const AlignedAllocator<U>&) const { return true; }
};

using Buffer = std::vector<double, AlignedAllocator<double>>;

// Dense row-major float64 tensor.
struct Tensor {
    std::vector<std::size_t> shape;
    Buffer data;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> s, double fill = 0.0);
    Tensor(std::vector<std::size_t> s, std::vector<double> values);

    std::size_t size() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }
    std::size_t dim(std::size_t i) const { return shape.at(i); }
    double* raw() { return data.data(); }
    const double* raw() const { return data.data(); }
    std::string shape_string() const;

    bool operator==(const Tensor&) const = default;
};

std::size_t element_count(const std::vector<std::size_t>& shape);

struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;

    void zero_grad();
};

}  // namespace proxsense::nn
