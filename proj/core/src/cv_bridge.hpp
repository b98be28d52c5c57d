#pragma once

// Conversions between ImageTensor and OpenCV matrices (BGR channel order).

#include <opencv2/core.hpp>

#include "hideseek/image.hpp"

namespace hideseek::detail {

/// CV_8UC1 / CV_8UC3 from the u8 view of `image`.
cv::Mat to_mat_u8(const ImageTensor& image);
/// CV_32FC1 / CV_32FC3 in [0, 1].
cv::Mat to_mat_unit(const ImageTensor& image);
/// From an 8-bit matrix; result in the u8 domain.
ImageTensor from_mat_u8(const cv::Mat& mat);
/// From a float matrix in [0, 1]; result quantized to u8.
ImageTensor from_mat_unit(const cv::Mat& mat);

}  // namespace hideseek::detail
