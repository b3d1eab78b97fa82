import init, { Demo } from "./pkg/puw_wasm.js";

const $ = (id) => document.getElementById(id);
let demo = null;

function paint(id, rgba) {
  const c = $(id);
  c.width = demo.cols();
  c.height = demo.rows();
  const img = new ImageData(new Uint8ClampedArray(rgba), c.width, c.height);
  c.getContext("2d").putImageData(img, 0, 0);
}

function clear(id) {
  const c = $(id);
  c.getContext("2d").clearRect(0, 0, c.width, c.height);
}

function plotCurve(flat) {
  const pts = [];
  for (let i = 0; i < flat.length; i += 3) pts.push({ beta: flat[i], v: flat[i + 1], h: flat[i + 2] });
  const c = $("curve"), g = c.getContext("2d");
  const pad = 30, w = c.width - 2 * pad, h = c.height - 2 * pad;
  g.clearRect(0, 0, c.width, c.height);
  const bmax = Math.max(...pts.map((p) => p.beta));
  const vmax = Math.max(1, ...pts.map((p) => p.v));
  const x = (b) => pad + (w * b) / bmax;
  g.strokeStyle = "#888";
  g.strokeRect(pad, pad, w, h);
  g.fillStyle = "#333";
  g.fillText("0", pad - 4, c.height - pad + 14);
  g.fillText(bmax.toFixed(1), pad + w - 16, c.height - pad + 14);
  g.fillText(String(vmax), 4, pad + 4);
  const series = (key, max, color) => {
    g.strokeStyle = color;
    g.beginPath();
    pts.forEach((p, i) => {
      const y = pad + h - (h * p[key]) / max;
      i ? g.lineTo(x(p.beta), y) : g.moveTo(x(p.beta), y);
    });
    g.stroke();
  };
  series("v", vmax, "#c0392b");
  series("h", Math.log(3), "#2e6fbf");
}

function status(msg) {
  $("status").textContent = msg;
}

function guard(fn) {
  return () => {
    try {
      fn();
    } catch (e) {
      status(`Error: ${e.message ?? e}`);
    }
  };
}

$("synth").onclick = guard(() => {
  demo?.free();
  demo = new Demo(Number($("size").value), $("hard").checked, Number($("seed").value));
  paint("truth", demo.truth_rgba());
  paint("wrapped", demo.wrapped_rgba());
  ["entropy", "mf", "lsq"].forEach(clear);
  $("metrics").hidden = true;
  $("anneal").disabled = false;
  $("compare").disabled = true;
  status(`${demo.rows()}×${demo.cols()} terrain; edgewise rounding leaves ${demo.greedy_violations()} curl violations.`);
});

$("anneal").onclick = guard(() => {
  const t0 = performance.now();
  const curve = demo.anneal(
    Number($("tstart").value),
    Number($("tend").value),
    Number($("steps").value),
    Number($("sigma").value),
  );
  plotCurve(curve);
  paint("entropy", demo.entropy_rgba());
  $("compare").disabled = false;
  const left = curve[curve.length - 2];
  status(`Annealed in ${(performance.now() - t0).toFixed(0)} ms; ${left} curl violations remain.`);
});

$("compare").onclick = guard(() => {
  const c = demo.compare();
  paint("mf", c.variational_rgba());
  paint("lsq", c.lsq_rgba());
  const name = c.hybrid ? "variational + LS fit" : "variational";
  $("mf-name").textContent = name;
  $("mf-caption").textContent = `${name} surface${c.exact ? " (exact)" : ""}`;
  $("mf-rmse").textContent = c.variational_rmse.toFixed(4);
  $("mf-wrmse").textContent = c.variational_wrapped_rmse.toFixed(4);
  $("ls-rmse").textContent = c.lsq_rmse.toFixed(4);
  $("ls-wrmse").textContent = c.lsq_wrapped_rmse.toFixed(4);
  $("metrics").hidden = false;
  c.free();
});

await init();
status("Ready. Generate a terrain to start.");
