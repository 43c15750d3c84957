import init, { certify, rateCurve, spectrum } from "./pkg/arcert_web.js";

const $ = (id) => document.getElementById(id);

function parseVector(text) {
  const parts = text.split(/[\s,]+/).filter((s) => s.length > 0).map(Number);
  if (parts.some((x) => !Number.isFinite(x))) throw new Error(`not a numeric vector: "${text}"`);
  return parts;
}

function process() {
  return { coeffs: parseVector($("coeffs").value), noise_variance: Number($("sigma2").value) };
}

function show(outId, fn) {
  const out = $(outId);
  out.classList.remove("error");
  try {
    return fn();
  } catch (e) {
    out.classList.add("error");
    out.textContent = String(e.message ?? e);
    return null;
  }
}

const fmt = (x) => (x === null || x === undefined ? "none" : Math.abs(x) < 1e-3 || Math.abs(x) >= 1e4 ? x.toExponential(4) : x.toFixed(5));

function runCertify() {
  show("certify-out", () => {
    const dirText = $("direction").value.trim();
    const req = {
      ...process(),
      horizon: Number($("horizon").value),
      epsilon_fraction: Number($("frac").value),
      direction: dirText ? parseVector(dirText) : null,
    };
    const r = JSON.parse(certify(JSON.stringify(req)));
    const lines = [
      `λ_n        ${fmt(r.lambda_n)}`,
      `ε          ${fmt(r.epsilon)}`,
      `feasible   ${r.feasible}`,
      `δ          ${fmt(r.delta)}   (log δ = ${r.log_delta.toFixed(3)})`,
      `2δ         ${fmt(r.two_delta)}${r.vacuous ? "   vacuous" : ""}`,
      `terms      ${r.lemma_terms.map(fmt).join(", ")}`,
      `radius     ${fmt(r.radius)}`,
      `V_dn       ${JSON.stringify(r.v_dn.map((row) => row.map((x) => +x.toPrecision(5))))}`,
      `V_up       ${JSON.stringify(r.v_up.map((row) => row.map((x) => +x.toPrecision(5))))}`,
    ];
    $("certify-out").textContent = lines.join("\n");
  });
}

function plot(canvas, series, { xlog = false, xlabel = "", ylabel = "" } = {}) {
  const ctx = canvas.getContext("2d");
  const W = canvas.width, H = canvas.height, pad = 48;
  ctx.clearRect(0, 0, W, H);
  const pts = series.flatMap((s) => s.points);
  if (pts.length === 0) return;
  const tx = (x) => (xlog ? Math.log10(x) : x);
  const xs = pts.map((p) => tx(p[0])), ys = pts.map((p) => p[1]);
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  let [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  if (y1 - y0 < 1e-12) { y0 -= 1; y1 += 1; }
  const sx = (x) => pad + ((tx(x) - x0) / (x1 - x0 || 1)) * (W - 2 * pad);
  const sy = (y) => H - pad - ((y - y0) / (y1 - y0)) * (H - 2 * pad);

  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, W - 2 * pad, H - 2 * pad);
  ctx.fillStyle = "#444";
  ctx.font = "12px sans-serif";
  ctx.fillText(xlabel, W / 2 - 30, H - 10);
  ctx.fillText(ylabel, 6, pad - 14);
  ctx.fillText((xlog ? 10 ** x0 : x0).toPrecision(3), pad, H - pad + 14);
  ctx.fillText((xlog ? 10 ** x1 : x1).toPrecision(3), W - pad - 30, H - pad + 14);
  ctx.fillText(y1.toPrecision(3), 4, pad + 4);
  ctx.fillText(y0.toPrecision(3), 4, H - pad);

  series.forEach((s, k) => {
    ctx.strokeStyle = s.color;
    ctx.fillStyle = s.color;
    if (s.dots) {
      s.points.forEach(([x, y]) => ctx.fillRect(sx(x) - 2, sy(y) - 2, 4, 4));
    } else {
      ctx.beginPath();
      s.points.forEach(([x, y], i) => (i === 0 ? ctx.moveTo(sx(x), sy(y)) : ctx.lineTo(sx(x), sy(y))));
      ctx.stroke();
    }
    ctx.fillText(s.label, W - pad - 220, pad + 16 + 14 * k);
  });
}

function runRate() {
  show("rate-out", () => {
    const req = {
      ...process(),
      horizon_min: Number($("nmin").value),
      horizon_max: Number($("nmax").value),
      points: Number($("npts").value),
    };
    const r = JSON.parse(rateCurve(JSON.stringify(req)));
    const feasible = r.points.filter((p) => p.log_two_delta !== null);
    plot(
      $("rate-canvas"),
      [{ label: "log 2δ at ε = N^(-1/2)", color: "#1f5fbf", points: feasible.map((p) => [p.horizon, p.log_two_delta]) }],
      { xlog: true, xlabel: "N (log scale)", ylabel: "log 2δ" },
    );
    $("rate-out").textContent =
      `λ_n = ${fmt(r.lambda_n)}; fitted slope of log 2δ against N^(1/2): ${fmt(r.slope)} (compare -λ_n = ${fmt(-r.lambda_n)})\n` +
      `${r.points.length - feasible.length} of ${r.points.length} points infeasible`;
  });
}

function runSpectrum() {
  show("spectrum-out", () => {
    const req = { ...process(), points: 512, toeplitz_dim: Number($("tdim").value) };
    const r = JSON.parse(spectrum(JSON.stringify(req)));
    const series = [
      { label: "spectral density", color: "#1f5fbf", points: r.omega.map((w, i) => [w, r.density[i]]) },
      { label: "σ² M_Φ", color: "#b00020", points: [[0, r.density_peak], [Math.PI, r.density_peak]] },
    ];
    if (r.toeplitz_eigenvalues.length > 0) {
      const k = r.toeplitz_eigenvalues.length;
      series.push({
        label: `Toeplitz eigenvalues (dim ${k})`,
        color: "#2a8a2a",
        dots: true,
        points: r.toeplitz_eigenvalues.map((e, i) => [(Math.PI * i) / Math.max(k - 1, 1), e]),
      });
    }
    plot($("spectrum-canvas"), series, { xlabel: "ω", ylabel: "density" });
    $("spectrum-out").textContent =
      `M_Φ = ${fmt(r.m_phi)}\nroots: ${r.roots.map(([re, im]) => `${re.toFixed(4)}${im >= 0 ? "+" : ""}${im.toFixed(4)}i`).join(", ")}`;
  });
}

await init();
$("frac").addEventListener("input", () => { $("frac-val").textContent = Number($("frac").value).toFixed(2); runCertify(); });
$("certify-btn").addEventListener("click", runCertify);
$("rate-btn").addEventListener("click", runRate);
$("spectrum-btn").addEventListener("click", runSpectrum);
for (const id of ["coeffs", "sigma2"]) $(id).addEventListener("change", () => { runCertify(); runRate(); runSpectrum(); });
runCertify();
runRate();
runSpectrum();
