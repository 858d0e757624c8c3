import init, { hardy_at, hardy_sweep, run_builtin, builtin_source, check_source } from "./pkg/wfs_wasm.js";

const $ = (id) => document.getElementById(id);

function show(el, text, error = false) {
  el.textContent = text;
  el.classList.toggle("err", error);
}

function plot(points, theta) {
  const c = $("plot");
  const g = c.getContext("2d");
  const pad = 30;
  const w = c.width - 2 * pad;
  const h = c.height - 2 * pad;
  const ymax = 0.1;
  const x = (t) => pad + (t / 90) * w;
  const y = (p) => c.height - pad - (p / ymax) * h;
  g.clearRect(0, 0, c.width, c.height);
  g.strokeStyle = "#999";
  g.strokeRect(pad, pad, w, h);
  g.fillStyle = "#444";
  g.fillText("0", pad - 12, c.height - pad + 4);
  g.fillText("0.1", pad - 24, pad + 4);
  g.fillText("90°", c.width - pad - 10, c.height - pad + 16);
  g.strokeStyle = "#1060c0";
  g.beginPath();
  points.forEach(([t, p], i) => (i ? g.lineTo(x(t), y(p)) : g.moveTo(x(t), y(p))));
  g.stroke();
  g.strokeStyle = "#c03010";
  g.beginPath();
  g.moveTo(x(theta), pad);
  g.lineTo(x(theta), c.height - pad);
  g.stroke();
}

function main() {
  const points = JSON.parse(hardy_sweep(1.0, 2.0));

  const updateHardy = () => {
    const theta = Number($("theta").value);
    $("theta-val").textContent = theta;
    plot(points, theta);
    try {
      const r = JSON.parse(hardy_at(theta, 1.0));
      show(
        $("hardy-out"),
        `joint probability ${r.joint_probability.toFixed(6)}\n` +
          `settings a1=${r.a1.toFixed(1)} a2=${r.a2.toFixed(1)} b1=${r.b1.toFixed(1)} b2=${r.b2.toFixed(1)} deg\n` +
          `witness: ${r.witness ? "yes" : "no"}`,
      );
    } catch (e) {
      show($("hardy-out"), String(e), true);
    }
  };
  $("theta").addEventListener("input", updateHardy);
  updateHardy();

  $("run").addEventListener("click", () => {
    try {
      show($("run-out"), run_builtin($("scenario").value, $("policy").value));
    } catch (e) {
      show($("run-out"), String(e), true);
    }
  });

  const load = () => ($("source").value = builtin_source($("template").value) ?? "");
  $("template").addEventListener("change", load);
  load();

  $("check-btn").addEventListener("click", () => {
    const r = JSON.parse(check_source($("source").value, $("check-policy").value));
    if (r.ok) {
      show($("check-out"), r.report);
    } else if (r.diagnostic) {
      show($("check-out"), r.diagnostic.text, true);
    } else {
      show($("check-out"), r.error, true);
    }
  });
}

init().then(main);
