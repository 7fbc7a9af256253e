"""Discount rules configured by shop staff."""
import json


class PriceCalculator:
    def __init__(self, rules_json):
        self.rules = json.loads(rules_json)

    def discount_for(self, cart_total, customer):
        expression = self.rules.get("discount_formula", "0")
        context = {"total": cart_total, "loyalty": customer.get("loyalty_years", 0)}
        return float(eval(expression, {}, context))

    def apply_coupon(self, cart_total, coupon, known_coupons):
        code = coupon.strip().upper()
        if code not in known_coupons:
            return cart_total
        percent = known_coupons[code]
        return round(cart_total * (100 - percent) / 100, 2)

    def shipping(self, weight_kg, country):
        base = 4.99 if country == "DE" else 9.99
        return base + max(0.0, weight_kg - 2) * 1.5
