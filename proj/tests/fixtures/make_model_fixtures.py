"""Regenerates the small ONNX fixtures used by the classifier tests.

Writes into tests/fixtures/model/:
  tiny_roi.onnx + tiny_roi.json        2-way softmax model and its manifest
  golden_patch.png + golden_scores.json reference scores computed by torch
  three_class.onnx + three_class.json  wrong output width, must be rejected
  corrupt.onnx + corrupt.json          truncated graph, must be rejected
"""
import json
import pathlib

import numpy as np
import torch
from PIL import Image

OUT = pathlib.Path(__file__).resolve().parent / "model"
SIZE = 224
MEANS = [123.675, 116.28, 103.53]
SCALE = 1.0 / 58.0


def net(classes):
    torch.manual_seed(11)
    return torch.nn.Sequential(
        torch.nn.Conv2d(3, 4, kernel_size=8, stride=8),
        torch.nn.ReLU(),
        torch.nn.AdaptiveAvgPool2d(1),
        torch.nn.Flatten(),
        torch.nn.Linear(4, classes),
        torch.nn.Softmax(dim=1),
    ).eval()


def export(model, name):
    dummy = torch.zeros(1, 3, SIZE, SIZE)
    torch.onnx.export(model, dummy, OUT / f"{name}.onnx", opset_version=11,
                      input_names=["input"], output_names=["probs"], dynamo=False)
    manifest = {
        "input_size": SIZE,
        "channel_order": "RGB",
        "means": MEANS,
        "scale": SCALE,
        "layout": "NCHW",
        "class_order": ["background", "roi"],
        "model_path": f"{name}.onnx",
        "metadata": {"fixture": name},
    }
    (OUT / f"{name}.json").write_text(json.dumps(manifest, indent=2) + "\n")


def golden_patch():
    y, x = np.mgrid[0:SIZE, 0:SIZE]
    rgb = np.stack([(x * 255) // (SIZE - 1), (y * 255) // (SIZE - 1),
                    ((x + y) * 7) % 256], axis=-1).astype(np.uint8)
    rgb[60:140, 80:170] = (40, 20, 90)
    return rgb


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    model = net(2)
    export(model, "tiny_roi")
    export(net(3), "three_class")

    data = (OUT / "tiny_roi.onnx").read_bytes()
    (OUT / "corrupt.onnx").write_bytes(data[: len(data) // 3])
    corrupt = json.loads((OUT / "tiny_roi.json").read_text())
    corrupt["model_path"] = "corrupt.onnx"
    (OUT / "corrupt.json").write_text(json.dumps(corrupt, indent=2) + "\n")

    rgb = golden_patch()
    Image.fromarray(rgb).save(OUT / "golden_patch.png")
    x = (torch.from_numpy(rgb.astype(np.float64)) - torch.tensor(MEANS, dtype=torch.float64)) * SCALE
    x = x.permute(2, 0, 1).unsqueeze(0).float()
    with torch.no_grad():
        probs = model(x)[0].double().tolist()
    (OUT / "golden_scores.json").write_text(json.dumps(
        {"patch": "golden_patch.png", "p_background": probs[0], "p_roi": probs[1]}, indent=2) + "\n")


if __name__ == "__main__":
    main()
