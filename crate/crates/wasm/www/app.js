// Wires the wasm module to the page: sliders drive the protocol engine,
// canvases render the Husimi field and the two diagnostic curves.
//
// Build the module first (from crates/wasm):
//   wasm-pack build --target web --out-dir www/pkg
import init, { Demo } from "./pkg/spinenc_wasm.js";

const $ = (id) => document.getElementById(id);
const sliders = ["theta", "tau1", "tau2", "tau3", "stage"];

let demo = null;

function params() {
  return {
    theta: parseFloat($("theta").value),
    tau1: parseFloat($("tau1").value),
    tau2: parseFloat($("tau2").value),
    tau3: parseFloat($("tau3").value),
    stage: parseInt($("stage").value, 10),
  };
}

function showSliderValues() {
  const p = params();
  $("theta-val").textContent = p.theta.toFixed(2);
  $("tau1-val").textContent = p.tau1.toFixed(4);
  $("tau2-val").textContent = p.tau2.toFixed(4);
  $("tau3-val").textContent = p.tau3.toFixed(4);
  $("stage-val").textContent = `${p.stage}: ${demo ? demo.stage_label(p.stage - 1) : ""}`;
}

// Diverging blue-white-red map for the signed field.
function colorOf(v, scale) {
  const t = Math.max(-1, Math.min(1, v / scale));
  if (t >= 0) {
    const u = 1 - t;
    return [255, Math.round(70 + 185 * u), Math.round(60 + 195 * u)];
  }
  const u = 1 + t;
  return [Math.round(60 + 195 * u), Math.round(110 + 145 * u), 255];
}

function drawSphere() {
  const p = params();
  const nPolar = 96;
  const nAz = 192;
  const values = demo.stage_husimi(p.theta, p.tau1, p.tau2, p.tau3, p.stage - 1, nPolar, nAz);
  const canvas = $("sphere");
  const ctx = canvas.getContext("2d");
  const img = ctx.createImageData(nAz, nPolar);
  let scale = 1e-12;
  for (const v of values) scale = Math.max(scale, Math.abs(v));
  for (let i = 0; i < nPolar; i++) {
    for (let j = 0; j < nAz; j++) {
      const [r, g, b] = colorOf(values[i * nAz + j], scale);
      const o = 4 * (i * nAz + j);
      img.data[o] = r;
      img.data[o + 1] = g;
      img.data[o + 2] = b;
      img.data[o + 3] = 255;
    }
  }
  // scale the field image up to the canvas
  createImageBitmap(img).then((bmp) => {
    ctx.imageSmoothingEnabled = true;
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    ctx.drawImage(bmp, 0, 0, canvas.width, canvas.height);
  });
}

function drawCurve(canvas, xs, ys, marker, logY) {
  const ctx = canvas.getContext("2d");
  const W = canvas.width, H = canvas.height, pad = 34;
  ctx.clearRect(0, 0, W, H);
  const ty = logY ? (v) => Math.log10(Math.max(v, 1e-16)) : (v) => v;
  const xMin = Math.min(...xs), xMax = Math.max(...xs);
  let yMin = Infinity, yMax = -Infinity;
  for (const v of ys) { const t = ty(v); yMin = Math.min(yMin, t); yMax = Math.max(yMax, t); }
  if (yMax - yMin < 1e-12) yMax = yMin + 1;
  const px = (x) => pad + (W - pad - 8) * (x - xMin) / (xMax - xMin);
  const py = (y) => H - pad + (pad + 8 - H) * (ty(y) - yMin) / (yMax - yMin);

  ctx.strokeStyle = "#c9d4de";
  ctx.strokeRect(pad, 8, W - pad - 16, H - pad - 8);
  ctx.fillStyle = "#5a6b7b";
  ctx.font = "11px system-ui";
  ctx.fillText(xMin.toFixed(2), pad - 6, H - pad + 14);
  ctx.fillText(xMax.toFixed(2), W - 36, H - pad + 14);
  const fmt = (t) => (logY ? `1e${t.toFixed(0)}` : t.toPrecision(3));
  ctx.fillText(fmt(yMax), 2, 16);
  ctx.fillText(fmt(yMin), 2, H - pad);

  ctx.strokeStyle = "#23639c";
  ctx.lineWidth = 1.6;
  ctx.beginPath();
  xs.forEach((x, i) => {
    const X = px(x), Y = py(ys[i]);
    if (i === 0) ctx.moveTo(X, Y); else ctx.lineTo(X, Y);
  });
  ctx.stroke();

  if (marker) {
    ctx.fillStyle = "#c0392b";
    ctx.beginPath();
    ctx.arc(px(marker[0]), py(marker[1]), 4, 0, 2 * Math.PI);
    ctx.fill();
    ctx.fillText(`(${marker[0].toFixed(4)}, ${marker[1].toExponential(2)})`,
      Math.min(px(marker[0]) + 6, canvas.width - 130), py(marker[1]) - 6);
  }
}

function drawTau3() {
  const p = params();
  const count = 120;
  const data = demo.tau3_curve(p.theta, p.tau1, p.tau2, count);
  const eps = Array.from(data.slice(0, count));
  const best = [data[count], data[count + 1]];
  const xs = eps.map((_, i) => 0.15 * i / (count - 1));
  drawCurve($("tau3plot"), xs, eps, best, true);
  return best;
}

function drawSqueeze() {
  const count = 80;
  const data = demo.squeeze_curve(count);
  const xs = Array.from(data.slice(0, count));
  const ys = Array.from(data.slice(count, 2 * count));
  const marker = [data[2 * count], data[2 * count + 1]];
  drawCurve($("squeeze"), xs, ys, marker, true);
}

function showReport() {
  const p = params();
  const rep = JSON.parse(demo.encode_report(p.theta, p.tau1, p.tau2, p.tau3));
  $("report").textContent =
    `N            ${rep.N}\n` +
    `phi          ${rep.phi.toExponential(3)}\n` +
    `epsilon      ${rep.epsilon.toExponential(3)}\n` +
    `eps_reduced  ${rep.epsilon_reduced.toExponential(3)}\n` +
    `T            ${rep.T.toFixed(5)}\n` +
    `T / T_CNOT   ${rep.T_over_cnot.toFixed(4)}`;
}

let pending = null;
function refresh() {
  showSliderValues();
  if (!demo) return;
  // coalesce slider storms into one redraw
  if (pending) cancelAnimationFrame(pending);
  pending = requestAnimationFrame(() => {
    showReport();
    drawSphere();
    drawTau3();
  });
}

async function rebuild() {
  const n = parseInt($("nsel").value, 10);
  $("report").textContent = `building spectral caches for N = ${n}…`;
  await new Promise((r) => setTimeout(r, 20)); // let the message paint
  demo = new Demo(n);
  drawSqueeze();
  refresh();
}

async function main() {
  await init();
  sliders.forEach((id) => $(id).addEventListener("input", refresh));
  $("nsel").addEventListener("change", rebuild);
  $("opt-tau3").addEventListener("click", () => {
    const best = drawTau3();
    $("tau3").value = best[0];
    refresh();
  });
  await rebuild();
}

main();
