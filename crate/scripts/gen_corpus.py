#!/usr/bin/env python3
"""Generate the shipped benchmark corpus and its seed workbooks.

Writes data/workbooks/*.json, data/sodbench.jsonl and
data/sodbench.manifest.json. Output is deterministic.
"""

import json
import random
import re
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
DATA = ROOT / "data"
TOTAL = 111
SWEEP = 20
SEED = 20240611

# (name, upstream count); mirrors the WORKBOOKS table in sod-core.
COUNTS = [
    ("Boomerang Sales", 9), ("Demographic Profile", 7), ("Dragging", 8),
    ("Easy GDP Breakdown", 10), ("Entire Shipping Costs", 16), ("Entire Summer Sales", 13),
    ("Expense Report", 6), ("Future Value", 7), ("GDP Breakdown", 7),
    ("Income Statement", 5), ("Income Statement 2", 9), ("Invoices", 16),
    ("Maturity Date", 8), ("Net Income", 3), ("Period Rate", 5),
    ("Present Value", 6), ("Pricing Table", 10), ("Ramp Up And Down", 5),
    ("Sales Rep", 6), ("Shipping Costs", 7), ("Simple Compound Interest", 2),
    ("Small Balance Sheet", 7), ("Stock Change", 4), ("Summer Sales", 9),
    ("Tax", 6), ("Velocity Displacement", 7), ("Weekly Sales", 13),
    ("XY Scatter Plot", 10),
]

CATEGORY = {
    "Write": "Entry and manipulation", "CopyPaste": "Entry and manipulation",
    "AutoFill": "Entry and manipulation", "CreateSheet": "Management",
    "Filter": "Management", "FreezePanes": "Management", "SetFormat": "Formatting",
    "CreateChart": "Chart", "SetChartLegend": "Chart", "CreatePivotTable": "Pivot table",
}
CATEGORY_ORDER = ["Entry and manipulation", "Management", "Formatting", "Chart", "Pivot table"]


def col(n):
    s = ""
    while n:
        n, r = divmod(n - 1, 26)
        s = chr(65 + r) + s
    return s


def slug(name):
    return re.sub(r"[^a-z0-9]+", "-", name.lower()).strip("-")


def num(x):
    return int(x) if float(x).is_integer() else round(x, 2)


# ---------------------------------------------------------------- workbooks

class Table:
    """Main data table on Sheet1 plus optional extra sheets."""

    def __init__(self, headers, rows, kinds, chart="Line", extra=None):
        self.headers = headers
        self.rows = rows
        self.kinds = kinds  # "cat", "num", "id" per column
        self.chart = chart
        self.extra = extra or []  # [(sheet, headers, rows)]
        self.derived = []  # [(header, formula with {r}, phrase)]

    @property
    def n(self):
        return len(self.rows)

    @property
    def width(self):
        return len(self.headers)

    def last_row(self):
        return self.n + 1

    def full(self):
        return f"Sheet1!A1:{col(self.width)}{self.last_row()}"

    def nums(self):
        return [i for i, k in enumerate(self.kinds) if k == "num"]

    def cats(self):
        return [i for i, k in enumerate(self.kinds) if k == "cat"]


def sheet_doc(name, headers, rows):
    cells = {}
    for c, h in enumerate(headers, 1):
        cells[f"{col(c)}1"] = {"t": "s", "v": h}
    for r, row in enumerate(rows, 2):
        for c, v in enumerate(row, 1):
            if isinstance(v, str):
                cells[f"{col(c)}{r}"] = {"t": "s", "v": v}
            else:
                cells[f"{col(c)}{r}"] = {"t": "n", "v": num(v)}
    return {"name": name, "cells": dict(sorted(cells.items())), "charts": [], "pivots": [],
            "filters": [], "format": []}


def plural(n):
    return "" if n == 1 else "s"


def describe(name, headers, rows):
    w, h = len(headers), len(rows) + 1
    hs = ", ".join(f'{col(i + 1)}: "{x}"' for i, x in enumerate(headers))
    return (f'Sheet "{name}" has {w} column{plural(w)} (Headers are {hs}) and {h} row{plural(h)} '
            f"(1 header row and {h - 1} data row{plural(h - 1)}).")


def build_tables(rng):
    t = {}
    names = ["Avery", "Blake", "Casey", "Drew", "Emery", "Finley", "Harper", "Jordan", "Kendall",
             "Logan", "Morgan", "Parker", "Quinn", "Riley", "Sawyer", "Taylor"]
    regions = ["North", "South", "East", "West"]

    def ri(a, b):
        return rng.randint(a, b)

    def rf(a, b):
        return round(rng.uniform(a, b), 2)

    products = ["Aspen", "Carlota", "Quad", "Yanaki"]
    tb = Table(["Date", "Customer", "Product", "Quantity"],
               [[f"2024-0{1 + i % 9}-{10 + i % 18}", names[i % len(names)], products[ri(0, 3)], ri(1, 25)]
                for i in range(24)],
               ["id", "cat", "cat", "num"], chart="Column",
               extra=[("Retail Price", ["Product", "Price"], [[p, ri(20, 60)] for p in products])])
    t["Boomerang Sales"] = tb

    tb = Table(["Respondent", "Gender", "Age", "Income", "Region"],
               [[f"R{i + 1:03}", ["Female", "Male"][ri(0, 1)], ri(18, 80), ri(18000, 120000), regions[ri(0, 3)]]
                for i in range(40)],
               ["id", "cat", "num", "num", "cat"], chart="Bar")
    t["Demographic Profile"] = tb

    tb = Table(["Trial", "Hanging Mass", "Acceleration"],
               [[i + 1, round(0.1 * (i + 1), 2), round(9.81 * 0.1 * (i + 1) / (0.75 + 0.1 * (i + 1)), 3)]
                for i in range(12)],
               ["id", "num", "num"], chart="XYScatter")
    tb.derived = [("Tension", "=0.75*C{r}", "the tension on the block"),
                  ("Hanging Weight", "=B{r}*9.81", "the weight of the hanging mass")]
    t["Dragging"] = tb

    countries = ["Brazil", "Canada", "France", "India", "Japan", "Kenya", "Mexico", "Norway"]
    tb = Table(["Country", "Year", "GDP", "Population", "Consumption"],
               [[c, y, ri(200, 4000), ri(5, 1400), ri(100, 2500)] for c in countries for y in (2021, 2022)],
               ["cat", "cat", "num", "num", "num"], chart="Column")
    tb.derived = [("GDP per Capita", "=C{r}/D{r}", "GDP per person"),
                  ("Consumption Share", "=E{r}/C{r}", "the share of GDP that is consumption")]
    t["Easy GDP Breakdown"] = tb

    def shipping(rate, minimum, rows):
        tb = Table(["Customers", "Seattle", "Milwaukee", "Birmingham", "Oakland"],
                   [[f"Customer {i + 1}", ri(50, 3000), ri(50, 3000), ri(50, 3000), ri(50, 3000)] for i in range(rows)],
                   ["id", "num", "num", "num", "num"], chart="Column")
        tb.derived = [(f"{city} Cost", f"=MAX({minimum},{c}{{r}}*{rate})", f"the shipping cost to {city}")
                      for city, c in (("Seattle", "B"), ("Milwaukee", "C"), ("Birmingham", "D"), ("Oakland", "E"))]
        return tb

    t["Entire Shipping Costs"] = shipping(3.5, 80, 70)
    t["Shipping Costs"] = shipping(3.11, 75, 30)

    items = ["Fans", "Hats", "Sandals", "Sunscreen", "Towels"]
    tb = Table(["Date", "Region", "Item", "Units", "Unit Price"],
               [[f"2024-0{6 + i % 3}-{10 + i % 19}", regions[ri(0, 3)], items[ri(0, 4)], ri(5, 90), rf(3, 40)]
                for i in range(45)],
               ["id", "cat", "cat", "num", "num"], chart="Column")
    tb.derived = [("Total", "=D{r}*E{r}", "the total for each sale")]
    t["Entire Summer Sales"] = tb

    tb = Table(["Week", "Region", "Sales"],
               [[f"Week {w}", r, ri(1000, 9000)] for w in range(1, 7) for r in regions],
               ["id", "cat", "num"], chart="Column")
    t["Summer Sales"] = tb

    tb = Table(["Item", "Subtotal", "Tax Rate"],
               [[x, ri(20, 900), 0.08] for x in ["Airfare", "Hotel", "Meals", "Taxi", "Parking", "Supplies",
                                                  "Printing", "Software", "Phone", "Training"]],
               ["id", "num", "num"], chart="Pie")
    tb.derived = [("Tax", "=B{r}*C{r}", "the tax on each expense"),
                  ("Total", "=B{r}+B{r}*C{r}", "the total of each expense including tax")]
    t["Expense Report"] = tb

    tb = Table(["Investment", "Present Value", "Rate", "Periods", "Years"],
               [[f"Plan {i + 1}", ri(1000, 20000), rf(0.02, 0.09), [1, 4, 12][i % 3], ri(2, 30)] for i in range(12)],
               ["id", "num", "num", "num", "num"], chart="Column")
    tb.derived = [("Future Value", "=B{r}*(1+C{r}/D{r})^(E{r}*D{r})", "the future value of each investment")]
    t["Future Value"] = tb

    tb = Table(["Investment", "Future Value", "Rate", "Periods", "Years"],
               [[f"Goal {i + 1}", ri(5000, 90000), rf(0.02, 0.09), [1, 4, 12][i % 3], ri(2, 30)] for i in range(12)],
               ["id", "num", "num", "num", "num"], chart="Column")
    tb.derived = [("Present Value", "=B{r}/(1+C{r}/D{r})^(E{r}*D{r})", "the present value of each investment")]
    t["Present Value"] = tb

    tb = Table(["Country", "Year", "GDP", "Population"],
               [[c, y, ri(200, 4000), ri(5, 1400)] for c in countries for y in (2019, 2020, 2021)],
               ["cat", "cat", "num", "num"], chart="Line",
               extra=[("Sheet2", ["Country"], [[c] for c in countries[:4]])])
    tb.derived = [("GDP per Capita", "=C{r}/D{r}", "GDP per person")]
    t["GDP Breakdown"] = tb

    tb = Table(["Year", "Net Sales", "COGS", "Operating Expenses", "Tax"],
               [[str(y), ri(50000, 90000), ri(20000, 40000), ri(5000, 15000), ri(1000, 5000)] for y in range(2017, 2025)],
               ["id", "num", "num", "num", "num"], chart="Line")
    tb.derived = [("Gross Profit", "=B{r}-C{r}", "gross profit"),
                  ("Operating Profit", "=B{r}-C{r}-D{r}", "operating profit"),
                  ("Net Profit", "=B{r}-C{r}-D{r}-E{r}", "net profit")]
    t["Income Statement"] = tb

    tb = Table(["Year", "Sales", "Returns", "Discounts", "Materials", "Labor", "Overhead"],
               [[str(y), ri(80000, 120000), ri(1000, 5000), ri(1000, 4000), ri(10000, 20000), ri(15000, 25000),
                 ri(5000, 9000)] for y in range(2016, 2025)],
               ["id", "num", "num", "num", "num", "num", "num"], chart="Line")
    tb.derived = [("Net Sales", "=B{r}-C{r}-D{r}", "net sales"),
                  ("COGS", "=E{r}+F{r}+G{r}", "the cost of goods sold"),
                  ("Gross Profit", "=B{r}-C{r}-D{r}-E{r}-F{r}-G{r}", "gross profit")]
    t["Income Statement 2"] = tb

    tb = Table(["Invoice", "Date", "Customer", "Amount", "Status"],
               [[f"INV-{1000 + i}", f"2024-{1 + i % 12:02}-{1 + i % 27:02}", names[ri(0, 9)], ri(100, 5000),
                 ["Paid", "Open", "Overdue"][ri(0, 2)]] for i in range(36)],
               ["id", "id", "cat", "num", "cat"], chart="Column")
    t["Invoices"] = tb

    tb = Table(["Loan", "Start Date", "Days"],
               [[f"Loan {i + 1}", 45000 + ri(0, 400), [30, 60, 90, 180, 365][ri(0, 4)]] for i in range(15)],
               ["id", "num", "num"], chart="Column")
    tb.derived = [("Maturity Date", "=B{r}+C{r}", "the maturity date of each loan")]
    t["Maturity Date"] = tb

    months = ["Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"]
    tb = Table(["Month", "Revenue", "Total Expenses"],
               [[m, ri(20000, 50000), ri(10000, 30000)] for m in months],
               ["id", "num", "num"], chart="Line")
    tb.derived = [("Net Income", "=B{r}-C{r}", "net income")]
    t["Net Income"] = tb

    tb = Table(["Investment", "Annual Rate", "Periods per Year"],
               [[f"Account {i + 1}", rf(0.01, 0.12), [1, 2, 4, 12][i % 4]] for i in range(12)],
               ["id", "num", "num"], chart="Column")
    tb.derived = [("Period Rate", "=B{r}/C{r}", "the rate per period")]
    t["Period Rate"] = tb

    tb = Table(["Order", "Customer", "Rolls"],
               [[f"ORD-{200 + i}", names[ri(0, 11)], ri(1, 60)] for i in range(30)],
               ["id", "cat", "num"], chart="Column",
               extra=[("Pricing Table", ["Min Quantity", "Price per Roll"], [[1, 55], [10, 50], [25, 46], [50, 40]])])
    t["Pricing Table"] = tb

    tb = Table(["Time Up", "Acceleration Up", "Time Down", "Acceleration Down"],
               [[round(0.5 * i, 1), round(0.4 * i, 2), round(0.5 * i, 1), round(4 - 0.3 * i, 2)] for i in range(1, 13)],
               ["num", "num", "num", "num"], chart="XYScatter")
    tb.derived = [("Velocity Up", "=A{r}*B{r}", "the velocity going up")]
    t["Ramp Up And Down"] = tb

    tb = Table(["Employee", "Jan", "Feb", "Mar", "Apr"],
               [[n, ri(2000, 9000), ri(2000, 9000), ri(2000, 9000), ri(2000, 9000)] for n in names[:10]],
               ["id", "num", "num", "num", "num"], chart="Column")
    tb.derived = [("Total Sales", "=SUM(B{r}:E{r})", "each employee's total sales"),
                  ("Average Sales", "=AVERAGE(B{r}:E{r})", "each employee's average monthly sales")]
    t["Sales Rep"] = tb

    tb = Table(["Principal", "Rate", "Years"],
               [[ri(1000, 10000), rf(0.02, 0.08), ri(1, 15)] for _ in range(10)],
               ["num", "num", "num"], chart="Column")
    tb.derived = [("Simple Interest", "=A{r}*B{r}*C{r}", "simple interest"),
                  ("Compound Interest", "=A{r}*(1+B{r})^C{r}-A{r}", "compound interest")]
    t["Simple Compound Interest"] = tb

    entries = [("Cash", "Asset"), ("Receivables", "Asset"), ("Inventory", "Asset"), ("Equipment", "Asset"),
               ("Payables", "Liability"), ("Loans", "Liability"), ("Accrued Wages", "Liability"),
               ("Owner Capital", "Equity"), ("Retained Earnings", "Equity")]
    tb = Table(["Item", "Category", "Amount"], [[a, b, ri(1000, 40000)] for a, b in entries],
               ["id", "cat", "num"], chart="Pie")
    t["Small Balance Sheet"] = tb

    tb = Table(["Stock", "Value Jan", "Value Jun"],
               [[s, rf(10, 400), rf(10, 400)] for s in ["ACME", "BOLT", "CORE", "DYNA", "ECHO", "FLUX", "GRID", "HALO"]],
               ["id", "num", "num"], chart="Column")
    tb.derived = [("Change", "=C{r}-B{r}", "the change in value"),
                  ("Percent Change", "=(C{r}-B{r})/B{r}", "the percent change")]
    t["Stock Change"] = tb

    tb = Table(["Week", "Sales", "Expenses", "Tax Rate"],
               [[f"Week {i}", ri(5000, 15000), ri(2000, 6000), 0.21] for i in range(1, 14)],
               ["id", "num", "num", "num"], chart="Line")
    tb.derived = [("Profit Before Tax", "=B{r}-C{r}", "profit before tax"),
                  ("Tax Expense", "=(B{r}-C{r})*D{r}", "the tax expense")]
    t["Tax"] = tb

    tb = Table(["Velocity", "Displacement"],
               [[round(1.5 * i, 1), round((1.5 * i) ** 2 / 19.62, 3)] for i in range(1, 16)],
               ["num", "num"], chart="XYScatter")
    tb.derived = [("Velocity Squared", "=A{r}^2", "the squared velocity")]
    t["Velocity Displacement"] = tb

    tb = Table(["Week", "Sales", "COGS"],
               [[f"Week {i}", ri(3000, 9000), ri(1000, 3000)] for i in range(1, 11)],
               ["id", "num", "num"], chart="Line")
    tb.derived = [("Profit", "=B{r}-C{r}", "profit"),
                  ("Margin", "=(B{r}-C{r})/B{r}", "the profit margin")]
    t["Weekly Sales"] = tb

    tb = Table(["Angle", "Range", "Height"],
               [[a, round(400 * __import__("math").sin(2 * a * 3.14159265 / 180) / 9.81, 2),
                 round(400 * __import__("math").sin(a * 3.14159265 / 180) ** 2 / 19.62, 2)] for a in range(5, 90, 5)],
               ["num", "num", "num"], chart="XYScatter")
    tb.derived = [("Range to Height", "=B{r}/C{r}", "the ratio of range to height")]
    t["XY Scatter Plot"] = tb
    return t


# ------------------------------------------------------------------ recipes
# Each recipe returns (groups, steps): groups is a list of lists of action
# strings, steps holds one reference sentence per group.

def q(s):
    return '"' + s + '"'


def w(rng_, *choices):
    return rng_.choice(choices)


def r_derived(tb, rng, k):
    if k >= len(tb.derived):
        return None
    header, formula, phrase = tb.derived[k]
    c = col(tb.width + 1)
    first = formula.format(r=2)
    groups = [
        [f'Write(range="Sheet1!{c}1", value={q(header)})'],
        [f'Write(range="Sheet1!{c}2", value={q(first)})'],
        [f'AutoFill(source="Sheet1!{c}2", destination="Sheet1!{c}2:{c}{tb.last_row()}")'],
    ]
    steps = [
        w(rng, f"Add a {header} column next to the data.", f"Label a new column {header}.",
          f"Put the heading {header} in the first empty column."),
        w(rng, f"Enter a formula in the first row that works out {phrase}.",
          f"In the first data row, calculate {phrase}.", f"Type the formula for {phrase} in the first row."),
        w(rng, "Drag the formula down to cover every row.", "Copy the formula down to the last row.",
          "Fill the formula down the rest of the column."),
    ]
    return groups, steps


def r_derived_chart(tb, rng, k):
    base = r_derived(tb, rng, k)
    if base is None:
        return None
    groups, steps = base
    header = tb.derived[k][0]
    end = col(tb.width + 1)
    name = f"{header} Trend" if tb.chart == "Line" else f"{header} Chart"
    groups.append([f'CreateChart(source="Sheet1!A1:{end}{tb.last_row()}", destSheet="Sheet1", '
                   f'chartType={q(tb.chart)}, chartName={q(name)})'])
    groups.append([f'SetChartLegend(chartName={q(name)}, position="bottom")'])
    steps.append(w(rng, f"Chart the table including the new {header} column.",
                   f"Make a {tb.chart.lower()} chart of all the columns.", "Plot the data in a chart."))
    steps.append(w(rng, "Move the legend below the chart.", "Show the legend at the bottom.",
                   "Place the chart legend underneath."))
    return groups, steps


def r_chart(tb, rng, k):
    nums = tb.nums()
    if not nums:
        return None
    if k == 0:
        src = tb.full()
        what = "the whole table"
    else:
        if k >= len(nums):
            return None
        c = col(nums[k] + 1)
        src = f"Sheet1!{c}1:{c}{tb.last_row()}"
        what = f"the {tb.headers[nums[k]]} column"
    ctype = tb.chart if k == 0 else w(rng, "Column", "Line", tb.chart)
    name = f"{tb.headers[nums[min(k, len(nums) - 1)]]} Overview" if k else "Data Overview"
    groups = [[f'CreateChart(source={q(src)}, destSheet="Sheet1", chartType={q(ctype)}, chartName={q(name)})']]
    steps = [w(rng, f"Create a {ctype.lower()} chart from {what}.", f"Visualize {what} with a {ctype.lower()} chart.",
               f"Insert a chart showing {what}.")]
    if rng.random() < 0.6:
        pos = w(rng, "right", "top", "bottom", "left")
        groups.append([f'SetChartLegend(chartName={q(name)}, position={q(pos)})'])
        steps.append(w(rng, f"Put the legend on the {pos}.", f"Move the legend to the {pos} of the chart."))
    return groups, steps


def r_filter(tb, rng, k):
    nums = tb.nums()
    if k >= len(nums):
        return None
    i = nums[k]
    values = sorted(r[i] for r in tb.rows)
    cut = num(values[len(values) // 2])
    op, word = w(rng, (">", "above"), ("<", "below"), (">=", "at least"))
    groups = [[f'Filter(source={q(tb.full())}, fieldIndex={i + 1}, criteria={q(op + str(cut))})']]
    steps = [w(rng, f"Filter the table to show rows where {tb.headers[i]} is {word} {cut}.",
               f"Keep only the rows with {tb.headers[i]} {word} {cut}.",
               f"Apply a filter so only {tb.headers[i]} values {word} {cut} are visible.")]
    return groups, steps


def r_pivot(tb, rng, k):
    cats, nums = tb.cats(), tb.nums()
    if not cats or not nums or k >= len(cats):
        return None
    c, v = tb.headers[cats[k]], tb.headers[nums[-1]]
    sheet = w(rng, "Summary", "Pivot", "Report")
    groups = [[f'CreateSheet(sheetName={q(sheet)})'],
              [f'CreatePivotTable(source={q(tb.full())}, destSheet={q(sheet)}, name={q(v + " by " + c)}, '
               f'rows={q(c)}, values={q(v)})']]
    steps = [w(rng, f"Add a sheet called {sheet}.", f"Insert a new worksheet named {sheet}."),
             w(rng, f"Build a pivot table there that totals {v} for each {c}.",
               f"Summarize {v} by {c} in a pivot table on that sheet.")]
    return groups, steps


def r_header_style(tb, rng, k):
    if k:
        return None
    last = col(tb.width)
    groups = [[f'SetFormat(range="Sheet1!A1:{last}1", property="bold", value="true")'],
              ['FreezePanes(range="Sheet1!A2")']]
    steps = [w(rng, "Make the header row bold.", "Bold the column headings."),
             w(rng, "Freeze the top row so the headers stay visible.", "Lock the header row in place.")]
    return groups, steps


def r_number_format(tb, rng, k):
    nums = tb.nums()
    if k >= len(nums):
        return None
    c = col(nums[k] + 1)
    fmt = w(rng, "0.00", "#,##0", "$#,##0.00")
    groups = [[f'SetFormat(range="Sheet1!{c}2:{c}{tb.last_row()}", property="numberFormat", value={q(fmt)})']]
    steps = [w(rng, f"Show the {tb.headers[nums[k]]} values with the {fmt} number format.",
               f"Format the {tb.headers[nums[k]]} column as {fmt}.")]
    return groups, steps


def r_aggregate_row(tb, rng, k):
    nums = tb.nums()
    if not nums or k > 1:
        return None
    fn, label = [("SUM", "Total"), ("AVERAGE", "Average")][k]
    row = tb.last_row() + 1
    first, last = nums[0] + 1, nums[-1] + 1
    if first == 1:
        return None
    c = col(first)
    groups = [[f'Write(range="Sheet1!A{row}", value={q(label)})'],
              [f'Write(range="Sheet1!{c}{row}", value="={fn}({c}2:{c}{row - 1})")']]
    steps = [w(rng, f"Type {label} below the last row.", f"Add a {label} label under the data."),
             w(rng, f"Compute the {label.lower()} of {tb.headers[first - 1]} beneath its column.",
               f"Use {fn} to get the {label.lower()} of {tb.headers[first - 1]}.")]
    if last > first and all(tb.kinds[i] == "num" for i in range(first - 1, last)):
        groups.append([f'AutoFill(source="Sheet1!{c}{row}", destination="Sheet1!{c}{row}:{col(last)}{row}")'])
        steps.append(w(rng, "Drag it across to the other numeric columns.", "Copy the formula to the right."))
    return groups, steps


def r_copy_sheet(tb, rng, k):
    if k:
        return None
    sheet = w(rng, "Backup", "Copy", "Archive")
    last = f"{col(tb.width)}{tb.last_row()}"
    groups = [[f'CreateSheet(sheetName={q(sheet)})'],
              [f'CopyPaste(source="Sheet1!A1:{last}", destination="{sheet}!A1:{last}")']]
    steps = [w(rng, f"Create a sheet named {sheet}.", f"Add a blank sheet called {sheet}."),
             w(rng, "Copy the whole table into it.", "Duplicate all the data onto the new sheet.")]
    return groups, steps


def r_summary_sheet(tb, rng, k):
    nums = tb.nums()
    if k >= len(nums) or k > 1:
        return None
    i = nums[k]
    c = col(i + 1)
    rng_ = f"Sheet1!{c}2:{c}{tb.last_row()}"
    groups = [["CreateSheet(sheetName=\"Stats\")"],
              ['Write(range="Stats!A1", value="Measure")', f'Write(range="Stats!B1", value={q(tb.headers[i])})'],
              ['Write(range="Stats!A2", value="Highest")', f'Write(range="Stats!B2", value="=MAX({rng_})")',
               'Write(range="Stats!A3", value="Lowest")', f'Write(range="Stats!B3", value="=MIN({rng_})")']]
    steps = [w(rng, "Add a new sheet named Stats.", "Create a Stats worksheet."),
             w(rng, f"Give it the headings Measure and {tb.headers[i]}.", "Write two column headings on it."),
             w(rng, f"Show the highest and lowest {tb.headers[i]} there.",
               f"Add the maximum and minimum {tb.headers[i]} using formulas.")]
    return groups, steps


def r_sort_free_copy_column(tb, rng, k):
    """Copy one column next to the table."""
    nums = tb.nums()
    if k >= len(nums) or k > 0:
        return None
    c = col(nums[-1] + 1)
    dest = col(tb.width + 2)
    groups = [[f'CopyPaste(source="Sheet1!{c}1:{c}{tb.last_row()}", destination="Sheet1!{dest}1:{dest}{tb.last_row()}")']]
    steps = [w(rng, f"Copy the {tb.headers[nums[-1]]} column to column {dest}.",
               f"Duplicate {tb.headers[nums[-1]]} into column {dest}, leaving a gap.")]
    return groups, steps


RECIPES = [
    (r_derived_chart, 1), (r_derived, 3), (r_chart, 3), (r_filter, 2), (r_pivot, 2),
    (r_header_style, 1), (r_number_format, 2), (r_aggregate_row, 2), (r_copy_sheet, 1),
    (r_summary_sheet, 2), (r_sort_free_copy_column, 1),
]


def candidates(tb, rng):
    out = []
    for fn, reps in RECIPES:
        for k in range(reps):
            got = fn(tb, rng, k)
            if got is not None:
                out.append(got)
    return out


def to_code(groups):
    lines = []
    for g in groups:
        for j, a in enumerate(g):
            lines.append(("- - " if j == 0 else "  - ") + a)
    return "\n".join(lines)


def categories(groups):
    used = {CATEGORY[a.split("(", 1)[0]] for g in groups for a in g}
    return [c for c in CATEGORY_ORDER if c in used]


def allocate():
    total = sum(c for _, c in COUNTS)
    exact = [(name, c * TOTAL / total) for name, c in COUNTS]
    base = {name: int(x) for name, x in exact}
    rest = TOTAL - sum(base.values())
    order = sorted(exact, key=lambda e: (-(e[1] - int(e[1])), e[0]))
    for name, _ in order[:rest]:
        base[name] += 1
    return base


def main():
    rng = random.Random(SEED)
    tables = build_tables(rng)
    quota = allocate()
    (DATA / "workbooks").mkdir(parents=True, exist_ok=True)
    instances = []
    for name, _ in COUNTS:
        tb = tables[name]
        sheets = [("Sheet1", tb.headers, tb.rows)] + tb.extra
        fname = f"{slug(name)}.json"
        book = {"version": 1, "sheets": [sheet_doc(*s) for s in sheets]}
        (DATA / "workbooks" / fname).write_text(json.dumps(book, indent=2) + "\n")
        state = " ".join(describe(*s) for s in sheets)
        pool = candidates(tb, random.Random(f"{SEED}-{name}"))
        if len(pool) < quota[name]:
            raise SystemExit(f"{name}: only {len(pool)} task recipes for {quota[name]} instances")
        picks = sorted(random.Random(f"pick-{name}").sample(range(len(pool)), quota[name]))
        if tb.derived and 0 not in picks:
            picks = [0] + picks[1:]
        for n, p in enumerate(picks, 1):
            groups, steps = pool[p]
            assert len(groups) == len(steps)
            instances.append({
                "id": f"{slug(name)}-{n:02}",
                "workbook": name,
                "categories": categories(groups),
                "code": to_code(groups),
                "reference_steps": steps,
                "sheet_state": state,
                "seed_workbook": fname,
            })
    assert len(instances) == TOTAL
    sweep = sorted(x["id"] for x in random.Random(f"sweep-{SEED}").sample(instances, SWEEP))
    with open(DATA / "sodbench.jsonl", "w") as f:
        for inst in instances:
            f.write(json.dumps(inst, ensure_ascii=False, separators=(",", ":")) + "\n")
    per_category, per_workbook = {}, {}
    for inst in instances:
        for c in inst["categories"]:
            per_category[c] = per_category.get(c, 0) + 1
        per_workbook[inst["workbook"]] = per_workbook.get(inst["workbook"], 0) + 1
    manifest = {"total": len(instances), "per_category": dict(sorted(per_category.items())),
                "per_workbook": dict(sorted(per_workbook.items())), "sweep_subset": sweep}
    (DATA / "sodbench.manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    print(f"wrote {len(instances)} instances over {len(COUNTS)} workbooks")


if __name__ == "__main__":
    main()
